"""Exception types shared across the pipeline."""


class Her2ScopeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(Her2ScopeError):
    """Invalid parameter, rule table or config file content."""


class IndeterminateScoreError(Her2ScopeError):
    """No cells available to score; the operator must add or include FOVs."""


class CoordinateError(Her2ScopeError):
    """A point falls outside the frame it is supposed to index."""


class RoiError(Her2ScopeError):
    """Exclusion polygon is open, degenerate or self-intersecting."""


class FixtureError(Her2ScopeError):
    """Synthetic fixture spec cannot be realized."""
