"""Exception hierarchy shared by all modules."""


class SweepError(Exception):
    """Base class for every error raised by the library."""


class NonConvergence(SweepError):
    pass


class InfeasibleSet(SweepError):
    pass


class PointNotInSet(SweepError):
    pass


class UnsupportedPair(SweepError):
    pass


class OutOfDomain(SweepError, ValueError):
    pass


class DimensionMismatch(SweepError, ValueError):
    pass


class HorizonMismatch(SweepError, ValueError):
    pass


class RangeMismatch(SweepError, ValueError):
    pass


class InvalidInitialState(SweepError, ValueError):
    pass


class GridMismatch(SweepError, ValueError):
    pass


class JumpyReparametrization(SweepError, ValueError):
    pass


class NotContinuousInput(SweepError, ValueError):
    pass


class TestFunctionOutsideZ(SweepError, ValueError):
    __test__ = False  # keep pytest from collecting it


class ConfigError(SweepError, ValueError):
    """Invalid configuration or request file."""
