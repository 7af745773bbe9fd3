"""Exception hierarchy shared by every module."""


class GeometryError(Exception):
    """Base class for all errors raised by bsdgeom."""


class ContractError(GeometryError, ValueError):
    """An argument violates a documented precondition (shape, range, ...)."""


class DomainBoundaryError(GeometryError):
    """A point (or an FD stencil point) lies outside the domain."""


class DegenerateMetricError(GeometryError):
    """A hermitian form that must be positive definite is not."""


class SamplingError(GeometryError):
    """Rejection sampling gave up after the configured cap."""


class InconsistentEmbeddingError(GeometryError):
    """A measured embedding invariant is not compatible with its declaration."""


class ConfigError(GeometryError, ValueError):
    """Unknown domain, potential or check identifier."""
