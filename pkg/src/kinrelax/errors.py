"""Exception hierarchy shared by all modules."""


class KinrelaxError(Exception):
    """Base class for every error raised by this package."""


class DomainError(KinrelaxError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InfiniteExitTimeError(DomainError):
    """A zero-speed particle never reaches the wall.

    ``mask`` marks the offending entries when the call was vectorized.
    """

    def __init__(self, message="zero speed: exit time is infinite", mask=None):
        super().__init__(message)
        self.mask = mask


class DivergentMomentError(DomainError):
    pass


class UnsupportedVariantError(KinrelaxError, TypeError):
    pass


class OutOfDomainError(DomainError):
    """Raised when a Laplace transform is requested where it does not exist."""

    def __init__(self, message, tag=None):
        super().__init__(message if tag is None else f"{message} [{tag}]")
        self.tag = tag


class PropagationError(KinrelaxError, FloatingPointError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateKernelError(KinrelaxError):
    pass


class ContourError(KinrelaxError):
    pass


class RefinementError(KinrelaxError):
    pass


class FitDomainError(DomainError):
    pass


class WindowTooLateError(FitDomainError):
    pass


class EmptyEnsembleError(KinrelaxError):
    pass


class StageError(KinrelaxError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, error):
        super().__init__(f"[{stage}] {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error
