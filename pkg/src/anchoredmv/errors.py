"""Exception types raised on degenerate geometric or algebraic input."""


class GeometryError(ValueError):
    """Base class for degenerate-configuration errors."""


class CenterProjection(GeometryError):
    pass


class LineThroughCenter(GeometryError):
    pass


class CoincidentCenters(GeometryError):
    pass


class CoincidentPlanes(GeometryError):
    pass


class ProportionalPoints(GeometryError):
    pass


class LineInPlane(GeometryError):
    pass


class RankDeficiency(GeometryError):
    pass


class CenterCoincidence(GeometryError):
    """The anchor point coincides with a camera center."""


class PatchInfinity(GeometryError):
    pass


class ArityMismatch(ValueError):
    """Track length does not match the number of cameras."""


class BadSlicePattern(ValueError):
    pass


class DegenerateDenominator(ValueError):
    """A view's patch denominator vanishes identically on the parameter chart."""


class ZeroPolynomial(ValueError):
    pass


class PathBudgetExceeded(RuntimeError):
    pass
