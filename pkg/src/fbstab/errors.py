"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for all geometric evaluation failures."""


class DomainError(GeometryError):
    """A field or metric was evaluated outside its domain of definition."""


class PreconditionError(GeometryError):
    """An operation was called with inputs violating its stated preconditions."""


class DegenerateSampleError(GeometryError):
    """A chart sample has a rank-deficient or badly conditioned Jacobian."""


class InvalidSampleError(GeometryError):
    """A boundary sample does not lie on the ambient boundary."""


class ProjectionError(GeometryError):
    """Newton projection onto a level set failed to converge."""


class DimensionError(GeometryError):
    """Dimensions (n, k, p) outside the range an operation supports."""


class StepFailureError(GeometryError):
    """Backtracking in the descent flow exhausted its halvings."""


class ConfigError(Exception):
    """Malformed configuration document or unknown catalog name."""
