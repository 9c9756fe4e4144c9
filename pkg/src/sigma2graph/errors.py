class Sigma2Error(Exception):
    """Base class for all package errors."""


class InputError(Sigma2Error):
    """Invalid user input or configuration."""


class DomainError(InputError, ValueError):
    """An argument lies outside the domain of an operation."""


class HypothesisError(InputError):
    """A hypothesis of a comparison or barrier check does not hold."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst or []


class SolverError(Sigma2Error):
    """A numerical solve failed."""


class NumericError(SolverError):
    pass


class EllipticityError(SolverError):
    """A jet left the admissible cone where ellipticity is required."""


class SpacelikeLost(SolverError):
    def __init__(self, message, worst_index=None, worst_slope=None):
        super().__init__(message)
        self.worst_index = worst_index
        self.worst_slope = worst_slope


class SolverStall(SolverError):
    def __init__(self, message, last_t=None, diagnostics=None):
        super().__init__(message)
        self.last_t = last_t
        self.diagnostics = diagnostics or {}


class StageFailure(SolverError):
    def __init__(self, message, partial_run=None):
        super().__init__(message)
        self.partial_run = partial_run


class SearchFailure(SolverError):
    def __init__(self, message, gaps=None):
        super().__init__(message)
        self.gaps = gaps or {}
