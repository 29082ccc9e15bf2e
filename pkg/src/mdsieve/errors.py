"""Exception types shared across the package."""


class SieveError(Exception):
    """Base class for all errors raised by mdsieve."""


class DomainError(SieveError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(SieveError, ValueError):
    """A documented precondition of an operation does not hold."""


class CapacityError(SieveError, ValueError):
    """A construction ran out of room (e.g. too few survivors to pick from)."""


class ResourceError(SieveError, RuntimeError):
    """A configured memory or work budget would be exceeded."""


class ParseError(SieveError, ValueError):
    """Malformed tuple text or configuration."""
