"""Exception types shared across the package."""


class GnnCheckError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(GnnCheckError):
    """An API precondition was violated (mixed specs, bad dimensions, ...)."""


class ConfigError(GnnCheckError):
    """An unknown name or malformed configuration string."""


class FormulaSyntaxError(GnnCheckError):
    """Formula text did not parse. Carries the offending position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaError(GnnCheckError):
    """A JSON document violated its schema. Carries the offending path."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path
