"""Exception types shared across the package."""


class SingridError(Exception):
    """Base class for package-specific errors."""


class OutsideDomain(SingridError):
    """A point lies outside the open domain."""


class SearchExhausted(SingridError):
    """A bounded search ended without a valid result."""


class DivergentIntegral(SingridError):
    """A radial integral was classified as divergent."""


class InconclusiveTolerance(SingridError):
    """Quadrature hit its panel limit with neither a convergence nor a divergence verdict."""


class DeltaNotFound(SingridError):
    """No radius below which the profile exceeds the required growth threshold was found."""


class ContainmentFailure(SingridError):
    """An exact geometric containment that must hold by construction failed."""


class NodeNotInSet(SingridError):
    """A grid node was expected in a node set but is missing."""
