"""Exception types raised across the package."""


class HexrotorError(Exception):
    """Base class for all package errors."""


class SingularDesign(HexrotorError):
    """The actuation matrix is rank deficient (the vehicle is not holonomic)."""


class NotUnit(HexrotorError, ValueError):
    """A direction vector is not of unit length."""


class NotSkew(HexrotorError, ValueError):
    """A matrix passed to ``unskew`` is not skew-symmetric."""


class NoConvergence(HexrotorError):
    """A local solve hit its evaluation cap or stalled without converging."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class AllStartsFailed(HexrotorError):
    """Every multistart initialization failed to produce a usable minimizer."""


class AttitudeSingularity(HexrotorError):
    """Attitude error is undefined: the rotation error is (close to) 180 degrees."""


class EmptyLog(HexrotorError, ValueError):
    """Metrics were requested for a log with no rows."""
