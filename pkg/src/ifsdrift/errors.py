"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Inputs violate a documented precondition (shape, dimension, mass)."""


class NotContractiveError(ValueError):
    """Raised when an operation requires a contraction factor r < 1."""


class ConvergenceFailureError(RuntimeError):
    """Iteration budget exhausted before reaching tolerance.

    Carries the last residual so callers can report how close the run got.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ExactSolverSizeError(ValueError):
    """Combined support exceeds the exact transport solver cap."""


class CertificateError(RuntimeError):
    """An optimality or feasibility certificate check failed."""


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""
