"""Exception types raised across the package."""


class PerflabError(Exception):
    """Base class for all package errors."""


class ArgumentError(PerflabError, ValueError):
    pass


class IngestionError(PerflabError, ValueError):
    pass


class NumericError(PerflabError, ArithmeticError):
    pass


class MapError(PerflabError):
    pass


class EstimationError(PerflabError):
    pass


class UndefinedConsistencyError(PerflabError, ValueError):
    pass


class FitError(PerflabError):
    pass


class ConfigError(PerflabError):
    """Invalid experiment configuration; ``line`` points into the config file when known."""

    def __init__(self, message, line=None, source=None):
        self.message, self.line, self.source = message, line, source
        where = "" if line is None else f"line {line}: "
        if source:
            where = f"{source}: {where}"
        super().__init__(where + message)
