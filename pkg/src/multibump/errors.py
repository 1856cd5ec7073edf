"""Exception types raised by the solvers and verifiers."""


class MultibumpError(Exception):
    """Base class for every error raised by this package."""


class SpecError(MultibumpError, ValueError):
    """A weight or problem specification violates its stated bounds."""


class MagnitudeFault(MultibumpError, FloatingPointError):
    """A grid function exceeded the overflow guard before an operator was applied."""


class IntegrationFault(MultibumpError, RuntimeError):
    """The adaptive integrator underflowed its step size (not a blow-up)."""


class Unresolved(MultibumpError, RuntimeError):
    """Two zeros of the shooting map could not be separated by the scan."""


class MarginViolation(MultibumpError, RuntimeError):
    """A solution sits on the boundary of a box, so its degree is ill-defined."""


class BandHit(MultibumpError, RuntimeError):
    """A per-interval sup lies inside the dead band around rho."""


class SuiteFailure(MultibumpError, RuntimeError):
    """A verification run produced a result that contradicts a proved statement."""
