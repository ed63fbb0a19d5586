"""Exception types shared across the package."""


class BoutrouxError(Exception):
    """Base class for all package errors."""


class StokesDirectionError(BoutrouxError):
    """A Laplace ray was requested exactly along a singular direction."""


class RadiusExceededError(BoutrouxError):
    """Analytic continuation of a germ degraded below tolerance."""

    def __init__(self, message, err_est=None):
        super().__init__(message)
        self.err_est = err_est


class NoConvergenceError(BoutrouxError):
    """An accelerated limit or fit did not settle."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NonConvergentSumError(BoutrouxError):
    """Transseries terms failed to decay."""


class FitDegenerateError(BoutrouxError):
    """A least-squares fit was attempted on an uninformative grid."""


class QuadratureError(BoutrouxError):
    """A contour/ray quadrature failed to meet its error target."""

    def __init__(self, message, err_est=None):
        super().__init__(message)
        self.err_est = err_est


class StepFailureError(BoutrouxError):
    """The adaptive stepper could not meet the local tolerance."""


class ChartDeadlockError(BoutrouxError):
    """Both solution charts are singular at the same point (bug sentinel)."""


class OutsideRegionError(BoutrouxError):
    """A two-scale evaluation point lies outside both validity regions."""


class ObstructionError(BoutrouxError):
    """A log(xi - 12) term survived in a two-scale coefficient."""

    def __init__(self, message, coefficient=None):
        super().__init__(message)
        self.coefficient = coefficient


class DegenerateCycleError(BoutrouxError):
    """The cubic has (nearly) repeated roots; the cycle is invalid."""


class CycleBreakdownError(BoutrouxError):
    """R developed a zero on the integration contour."""


class MatchFailureError(BoutrouxError):
    """ODE-continued period disagrees with direct quadrature."""


class NoIntegerConsistencyError(BoutrouxError):
    """No integer winding count balances the Stokes-multiplier equation."""


class ConfigError(BoutrouxError):
    """Invalid run configuration."""
