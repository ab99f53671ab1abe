"""Exception hierarchy shared by every spacegnn module."""


class SpaceGNNError(Exception):
    """Base class for all errors raised by spacegnn."""


# geometry
class GeometryError(SpaceGNNError, ArithmeticError):
    pass


class PoleProximityError(GeometryError):
    """Tangent argument within 1e-9 of an odd multiple of pi/2 (kappa > 0)."""


class DomainViolationError(GeometryError):
    """Point lies outside the open ball of radius 1/sqrt(-kappa)."""


class DegenerateDenominatorError(GeometryError):
    """Mobius addition denominator vanished (antipodal points, kappa > 0)."""


# tensor
class ShapeMismatchError(SpaceGNNError, ValueError):
    pass


class InvalidProbabilityError(SpaceGNNError, ValueError):
    pass


class EmptyMaskError(SpaceGNNError, ValueError):
    pass


class NotScalarError(SpaceGNNError, ValueError):
    pass


# graph data
class GraphDataError(SpaceGNNError, ValueError):
    pass


class ManifestParseError(GraphDataError):
    pass


class DanglingEdgeError(GraphDataError):
    pass


class FeatureShapeError(GraphDataError):
    pass


class BadLabelError(GraphDataError):
    pass


class InsufficientLabelsError(GraphDataError):
    pass


class ConfigInvalidError(SpaceGNNError, ValueError):
    pass


# model / training
class MemberShapeMismatchError(SpaceGNNError, ValueError):
    pass


class NotSimplexError(SpaceGNNError, ValueError):
    pass


class NonFiniteLossError(SpaceGNNError, FloatingPointError):
    pass


class OneClassOnlyError(SpaceGNNError, ValueError):
    pass


# diagnostics
class DegenerateTripletError(SpaceGNNError, ValueError):
    pass


class NoLabeledEdgesError(SpaceGNNError, ValueError):
    pass
