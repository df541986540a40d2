"""Exception hierarchy."""


class QKdVError(Exception):
    """Base class for all package errors."""


class ProblemError(QKdVError, ValueError):
    """An invalid problem specification."""


class NonPositiveKappa(ProblemError):
    pass


class DerivativeMismatch(ProblemError):
    pass


class InsufficientOrder(ProblemError):
    pass


class RangeViolation(QKdVError, ValueError):
    """A field takes values outside the admissible interval J."""


class UnresolvedField(QKdVError, ValueError):
    """Spectral tail too large for derivatives to be meaningful."""


class EmptyEnsemble(QKdVError, ValueError):
    pass


class GridMismatch(QKdVError, ValueError):
    pass


class StepRejected(QKdVError, RuntimeError):
    pass


class BlowupDetected(QKdVError, RuntimeError):
    """H^4 norm crossed the configured threshold; ``trajectory`` holds the run so far."""

    def __init__(self, message, trajectory=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class CertificationFailed(QKdVError, RuntimeError):
    pass


class ConfigError(QKdVError, ValueError):
    pass
