"""Exception types shared across the package."""


class CycleMaxError(Exception):
    """Base class for all package-specific errors."""


class SpecFormatError(CycleMaxError, ValueError):
    """A spec file or dict violates the expected schema."""


class CapExceededError(CycleMaxError, ValueError):
    """A rate was requested at or beyond the cap of a finite chain."""


class NotPositiveRecurrentError(CycleMaxError):
    """Stationary distribution requested for a chain that has none."""


class PalmUndefinedError(CycleMaxError):
    """The psi-weighted distribution does not normalise."""


class NotStableError(CycleMaxError, ValueError):
    """Operation requires lambda < mu."""


class NotTransientError(CycleMaxError):
    """Conditional-on-finite quantities only exist for transient chains."""


class FitFailedError(CycleMaxError):
    """A power-law fit did not meet its residual tolerance."""


class NoMonotoneTailError(CycleMaxError):
    """No decreasing tail was found within the inspected range."""


class OutOfRangeError(CycleMaxError, ValueError):
    """Inversion target lies outside the representable range."""


class NotSubcriticalError(CycleMaxError):
    """Operation requires a geometrically decaying tail."""


class NotApplicableError(CycleMaxError):
    """The requested limit regime does not apply to this chain."""


class KindMismatchError(CycleMaxError, ValueError):
    """Norming-constant kind incompatible with the chain's tail."""


class EscapedCycleError(CycleMaxError):
    """A simulated cycle hit the escape horizon where none was tolerated."""


class NotIrreducibleError(CycleMaxError, ValueError):
    """Routing graph is not strongly connected."""


class SingularSystemError(CycleMaxError):
    """Traffic equations have no unique solution."""


class CoincidentLoadsError(CycleMaxError):
    """Closed form requires pairwise distinct station loads."""


class NonSeparableError(CycleMaxError, ValueError):
    """Operation needs station-separable weights."""
