"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid grid, family or experiment configuration."""


class GridMismatchError(ValueError):
    """Fields (or fields and weights) live on different grids."""


class SobolevIndexError(ValueError):
    """A derivative count or drop is outside what the Sobolev index allows."""


class UnsupportedExponentError(ValueError):
    """The integrability exponent is not admissible for the operation (odd p)."""


class DomainError(ValueError):
    """A group parameter lies outside the family's parameter ball."""


class InvariantViolation(RuntimeError):
    """A structural invariant (e.g. positive Jacobian) failed at runtime."""


class InsufficientDataError(ValueError):
    """Too few samples to fit a convergence order."""


class DegenerateTripleError(ValueError):
    """Marked-point images coincide, so no Moebius map is determined."""


class NeighborhoodError(ValueError):
    """A Moebius element is farther from the identity than allowed."""


class ProjectionError(RuntimeError):
    """Newton solve for the slice projection did not converge."""


class WitnessError(ValueError):
    """A section fails its extension/regularity witness."""
