"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the domain of a chart or a field."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or met an inconsistency."""
