"""Exception hierarchy. Every error is a ``ValueError`` so callers that only
care about bad input can catch one type."""


class InvalidArgument(ValueError):
    pass


class InvalidState(ValueError):
    pass


class PhysicsViolation(ValueError):
    """A computed quantity left its physical range.

    ``values`` carries the offending quantities by name.
    """

    def __init__(self, message, **values):
        super().__init__(message)
        self.values = values


class NoCancellation(PhysicsViolation):
    """Feedback cannot cancel the atomic input noise (zero coupling or
    total detection loss)."""


class MemoryErased(ValueError):
    """The memory gain is zero, so no figure of merit is defined."""


class ConfigError(ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
