"""Exception hierarchy. The CLI maps each family onto an exit code."""


class KreinFellerError(Exception):
    """Base class for all package errors."""


class ConfigError(KreinFellerError, ValueError):
    """Invalid measure, family, descriptor or option."""


class DomainError(ConfigError):
    """Argument outside the admissible domain, e.g. x outside [0, 1]."""


class BoundaryError(ConfigError):
    """Initial or right-hand side data violating Dirichlet boundary values."""


class SupportInclusionError(ConfigError):
    """The support of the source measure is not contained in that of the target."""


class NumericalError(KreinFellerError, ArithmeticError):
    """A numerical procedure failed to reach its target accuracy."""


class ConvergenceError(NumericalError):
    pass


class MissedRootError(NumericalError):
    pass


class InsufficientEigenpairsError(NumericalError):
    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class InvariantViolation(KreinFellerError, AssertionError):
    """A proven inequality or structural invariant failed numerically."""
