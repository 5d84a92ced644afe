"""Exception types raised by the kit."""


class DgkError(Exception):
    """Base class for all library errors."""


class DomainError(DgkError, ValueError):
    """A parameter lies outside the domain of a formula (non-SPD matrix, a <= 0, ...)."""


class DimensionError(DgkError, ValueError):
    """Array shapes or dimensions do not agree."""


class ConditioningError(DgkError, ArithmeticError):
    """A linear system or step size is too ill-conditioned to trust."""


class DegeneracyError(DgkError, ValueError):
    """Degenerate lattice sites (rank-deficient Jacobians) block an assembly step."""

    def __init__(self, message, sites=()):
        super().__init__(message)
        self.sites = list(sites)


class MarginError(DgkError, ValueError):
    """A stencil or site request falls outside the valid interior of a lattice."""


class LatticeMismatchError(DgkError, ValueError):
    """Two fields that must share a lattice do not."""


class IntegrationError(DgkError, RuntimeError):
    """An ODE integration left its domain or failed."""


class ConfigError(DgkError, ValueError):
    """A run configuration violates the expected schema."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
