"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Scenario or experiment configuration is infeasible or malformed."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class GeometryError(ValueError):
    """Target/BS/UE positions are degenerate (coincident points)."""


class SingularityError(ValueError):
    """A matrix that must be positive-definite is not."""


class ContractError(ValueError):
    """Array shapes passed between modules are inconsistent."""
