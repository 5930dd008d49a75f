"""Exception types raised by the solvers and curve tools."""


class GrowthError(Exception):
    """Base class for all package errors."""


class NoConvergence(GrowthError):
    """A deterministic solver exhausted its iteration budget.

    ``worst`` carries the largest residual seen and ``where`` an optional
    location (e.g. a chain position) so the caller can report it.
    """

    def __init__(self, message, worst=float("nan"), where=None):
        super().__init__(message)
        self.worst = worst
        self.where = where


class NotConverged(GrowthError):
    """A population-dynamics run did not meet its stopping rule."""

    def __init__(self, message, sweeps=0, statistic=float("nan")):
        super().__init__(message)
        self.sweeps = sweeps
        self.statistic = statistic


class DegenerateCurve(GrowthError):
    """The field curve is monotone, so there is no loop to equalize."""


class TooFewPoints(GrowthError):
    pass


class CoverageGap(GrowthError):
    """A curve does not cover the requested integration range."""


class NoPlateau(GrowthError):
    pass


class BranchGap(GrowthError):
    """Consecutive samples of a branch are too far apart in weight."""


class InvalidWeight(GrowthError, ValueError):
    pass
