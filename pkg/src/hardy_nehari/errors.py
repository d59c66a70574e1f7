"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`HardyNehariError`
so callers (and the CLI) can separate our failures from programming errors.
"""
from __future__ import annotations


class HardyNehariError(Exception):
    """Base class for all library errors."""


# -- parameter validation -------------------------------------------------

class ParameterError(HardyNehariError, ValueError):
    pass


class DimensionTooSmall(ParameterError):
    pass


class HardyOutOfRange(ParameterError):
    pass


class ExponentMismatch(ParameterError):
    pass


class OutOfRegime(ParameterError):
    """Parameters lie outside the regime where the requested computation applies."""


# -- grids / profiles -----------------------------------------------------

class BadGrid(HardyNehariError, ValueError):
    pass


class LengthMismatch(HardyNehariError, ValueError):
    pass


class GridMismatch(HardyNehariError, ValueError):
    pass


class ZeroProfile(HardyNehariError, ValueError):
    pass


# -- projections ----------------------------------------------------------

class ProjectionError(HardyNehariError):
    pass


class NotProjectable(ProjectionError):
    pass


class ZeroDenominator(NotProjectable):
    pass


class Singular(ProjectionError):
    pass


class ConditionFailed(ProjectionError):
    pass


class NoBracket(ProjectionError):
    pass


# -- root finding / solvers -----------------------------------------------

class NoRoot(HardyNehariError):
    pass


class AllStartsFailed(HardyNehariError):
    def __init__(self, message: str, failures: list[str] | None = None):
        super().__init__(message)
        self.failures = list(failures or [])


class PreconditionError(HardyNehariError, ValueError):
    pass


class ConfigError(HardyNehariError):
    pass
