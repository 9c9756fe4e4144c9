"""Spacelike graphs of prescribed sigma_2 curvature in Minkowski space."""
__version__ = "0.1.0"
