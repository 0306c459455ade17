"""Exception types raised across the toolkit."""


class PurcellFilterError(Exception):
    """Base class for all toolkit errors."""


class DomainError(PurcellFilterError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class SynthesisError(PurcellFilterError):
    """Prototype synthesis did not converge."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class SingularityError(PurcellFilterError):
    """A resolvent or linear solve hit an exact singularity."""


class BroadeningRequiredError(PurcellFilterError):
    """LDOS of a lossless network is a sum of delta functions."""


class CalibrationError(PurcellFilterError):
    def __init__(self, message, ldos_value):
        super().__init__(f"{message} (ldos={ldos_value:.3e} s/rad)")
        self.ldos_value = ldos_value


class StabilityError(PurcellFilterError):
    """Requested time step does not resolve the fastest dynamics."""


class FitError(PurcellFilterError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class InsufficientDataError(FitError):
    pass


class HybridizationError(PurcellFilterError):
    """Qubit weight is shared between two eigenmodes (near an anticrossing)."""

    def __init__(self, message, candidates):
        super().__init__(f"{message}: candidates {candidates}")
        self.candidates = candidates


class RealizationError(PurcellFilterError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index
