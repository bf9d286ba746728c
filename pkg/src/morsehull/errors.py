"""Exception types shared across the package."""


class MorsehullError(Exception):
    """Base class for all package errors."""


class UnsupportedClass(MorsehullError):
    """Group class has no decidable normal form implemented here."""


class ResourceLimit(MorsehullError):
    """A configured cap (vertices, search nodes, ...) was exceeded."""


class OutOfBall(MorsehullError):
    """Vertex index is not a vertex of this ball."""


class NotInteriorSound(MorsehullError):
    """Metric query on a pair whose geodesics may leave the ball."""


class TooFewVertices(MorsehullError):
    """Four-point condition needs at least four vertices."""


class SearchSpaceExceedsBall(MorsehullError):
    """Quasigeodesic search depth cannot fit inside the ball."""


class MissingRequiredGridEntry(MorsehullError):
    """Gauge grid lacks one of the mandatory (K,C) entries."""


class EmptyOrbit(MorsehullError):
    """Subgroup orbit contains no usable points."""


class NoFarPoints(MorsehullError):
    """No orbit point reaches the far-shell cutoff."""


class DirectionsMerged(MorsehullError):
    """The two limit directions coincide after merging."""


class EmptySet(MorsehullError):
    """Hausdorff distance of an empty vertex set."""


class TooFewDirections(MorsehullError):
    """Weak hull needs at least two merged limit directions."""


class EmptyHull(MorsehullError):
    """Weak hull has no vertices."""


class BaselineMissing(MorsehullError):
    """Regression baseline file does not exist."""


class Drift(MorsehullError):
    """Measured constants differ from the stored baseline."""

    def __init__(self, diffs):
        super().__init__("%d baseline difference(s)" % len(diffs))
        self.diffs = list(diffs)


class ParseError(MorsehullError):
    """Config or word text could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ValidationError(MorsehullError):
    """Config parsed but a field value is invalid."""
