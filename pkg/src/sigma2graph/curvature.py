"""Prescribed curvature functions H(x, z) and the builtin registry."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError

Z_FD_STEP = 1e-6


@dataclass
class PrescribedCurvature:
    """Positive function H(x, z); ``x`` has shape (..., n) and ``z`` shape (...).

    ``bounds`` is a pinching pair (upper, lower) when known; ``radial`` marks
    functions of |x| and z only.
    """

    func: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)
    dz: Optional[Callable] = None
    bounds: Optional[tuple] = None
    radial: bool = False

    def __call__(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.broadcast_to(np.asarray(z, dtype=float), x.shape[:-1])
        return np.broadcast_to(self.func(x, z), z.shape).astype(float)

    def dH_dz(self, x, z):
        if self.dz is not None:
            x = np.asarray(x, dtype=float)
            z = np.broadcast_to(np.asarray(z, dtype=float), x.shape[:-1])
            return np.broadcast_to(self.dz(x, z), z.shape).astype(float)
        z = np.asarray(z, dtype=float)
        step = Z_FD_STEP * np.maximum(1.0, np.abs(z))
        return (self(x, z + step) - self(x, z - step)) / (2.0 * step)

    def of_radius(self, r, z, dim):
        """H along the first coordinate axis; equals H(x, z) when radial."""
        r = np.asarray(r, dtype=float)
        x = np.zeros(r.shape + (dim,))
        x[..., 0] = r
        return self(x, z)


def _sq(x):
    return np.sum(x * x, axis=-1)


def constant(h=1.0):
    h = float(h)
    if h <= 0:
        raise InputError(f"constant curvature must be positive, got {h}")
    return PrescribedCurvature(lambda x, z: np.full(z.shape, h), "constant", {"h": h},
                               dz=lambda x, z: np.zeros(z.shape), bounds=(h, h), radial=True)


def pinched_sine(amp=0.2):
    """1 + amp sin(x_1) / (1 + |x|^2), pinched in [1 - amp, 1 + amp]."""
    amp = float(amp)
    if not 0 <= amp < 1:
        raise InputError(f"pinched_sine amplitude must lie in [0, 1), got {amp}")
    return PrescribedCurvature(lambda x, z: 1.0 + amp * np.sin(x[..., 0]) / (1.0 + _sq(x)),
                               "pinched_sine", {"amp": amp},
                               dz=lambda x, z: np.zeros(z.shape),
                               bounds=(1.0 + amp, 1.0 - amp))


def radial_bump(amp=0.1):
    """1 + amp exp(-|x|^2)."""
    amp = float(amp)
    if not -1 < amp:
        raise InputError(f"radial_bump amplitude must exceed -1, got {amp}")
    hi, lo = max(1.0, 1.0 + amp), min(1.0, 1.0 + amp)
    return PrescribedCurvature(lambda x, z: 1.0 + amp * np.exp(-_sq(x)), "radial_bump",
                               {"amp": amp}, dz=lambda x, z: np.zeros(z.shape),
                               bounds=(hi, lo), radial=True)


def increasing_tanh(amp=0.1):
    """1 + amp tanh(z) / (1 + |x|^2); nondecreasing in z, in [1, 1+amp] for z >= 0."""
    amp = float(amp)
    if not 0 <= amp < 1:
        raise InputError(f"increasing_tanh amplitude must lie in [0, 1), got {amp}")
    return PrescribedCurvature(
        lambda x, z: 1.0 + amp * np.tanh(z) / (1.0 + _sq(x)), "increasing_tanh", {"amp": amp},
        dz=lambda x, z: amp / np.cosh(z) ** 2 / (1.0 + _sq(x)),
        bounds=(1.0 + amp, 1.0), radial=True)


def sampled(grid):
    """H(x) given on a grid, independent of z."""
    lo, hi = float(grid.values.min()), float(grid.values.max())
    if lo <= 0:
        raise InputError("sampled curvature must be positive")
    return PrescribedCurvature(lambda x, z: grid.interpolate(x), "sampled", {},
                               dz=lambda x, z: np.zeros(z.shape), bounds=(hi, lo))


BUILTINS = {
    "constant": constant,
    "pinched_sine": pinched_sine,
    "radial_bump": radial_bump,
    "increasing_tanh": increasing_tanh,
}


def builtin(name, **params):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise InputError(f"unknown curvature builtin {name!r}; choose from {sorted(BUILTINS)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise InputError(f"bad parameters for curvature {name!r}: {exc}") from exc
