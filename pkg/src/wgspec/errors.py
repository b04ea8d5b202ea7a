"""Exception hierarchy shared by all wgspec modules."""


class WaveguideError(Exception):
    """Base class for all errors raised by wgspec."""


class NonUnitSpeed(WaveguideError):
    pass


class DegenerateNormal(WaveguideError):
    pass


class EvaluationDomain(WaveguideError):
    pass


class UnsupportedFiber(WaveguideError):
    pass


class MeshTooCoarse(WaveguideError):
    pass


class GapTooSmall(WaveguideError):
    pass


class NotRigid(WaveguideError):
    pass


class MissingMoments(WaveguideError):
    pass


class ClosedCurveUnsupported(WaveguideError):
    pass


class AdmissibilityViolated(WaveguideError):
    pass


class SeamIncompatible(WaveguideError):
    pass


class MemoryBudget(WaveguideError):
    pass


class EmptyWindow(WaveguideError):
    pass


class NonPositiveDistance(WaveguideError):
    pass


class ShiftSingular(WaveguideError):
    pass


class ConfigError(WaveguideError):
    pass


class NotConverged(WaveguideError):
    """Iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, iterations=None, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = residuals
