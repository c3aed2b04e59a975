"""Exception hierarchy shared across the toolkit."""


class MpuError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(MpuError, ValueError):
    """Tensor extents or chain bonds do not line up."""


class ArgumentError(MpuError, ValueError):
    """An argument is outside the accepted domain."""


class ResourceCapError(MpuError, RuntimeError):
    """A dense computation would exceed the configured size cap."""


class PreconditionError(MpuError, ValueError):
    """Input violates a documented precondition (e.g. not canonical)."""


class DegenerateInputError(MpuError, ValueError):
    """Input is degenerate, e.g. an identically zero chain."""


class NumericalError(MpuError, ArithmeticError):
    """A factorization failed to converge."""


class ConditioningError(NumericalError):
    """A similarity transform is too ill-conditioned to trust."""
