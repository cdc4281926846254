"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid lattice, weight or campaign configuration."""


class CompositionError(ValueError):
    """Two blocks that cannot be glued together."""


class DomainError(ValueError):
    """Argument outside the domain of a special function or relation."""


class ArgumentError(ValueError):
    """Invalid argument to an observable or fit."""


class FitError(RuntimeError):
    """A fit failed to converge or produced a degenerate result."""
