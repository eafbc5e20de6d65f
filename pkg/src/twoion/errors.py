"""Exception types raised across the package."""


class TwoIonError(Exception):
    """Base class for all package errors."""


class RockingUnstable(TwoIonError, ValueError):
    """A transverse trap frequency does not exceed the axial one."""


class InvalidSideband(TwoIonError, ValueError):
    pass


class TruncationOverflow(TwoIonError, RuntimeError):
    """Population reached the top of the Fock basis and regrowth is capped."""


class NormDrift(TwoIonError, RuntimeError):
    """Numerical propagation lost unitarity beyond the allowed drift."""


class FitDiverged(TwoIonError, RuntimeError):
    pass


class NoRoot(TwoIonError, ValueError):
    """No thermal occupation reproduces the measured sideband ratio."""


class ParseError(TwoIonError, ValueError):
    pass


class ValidationError(TwoIonError, ValueError):
    pass
