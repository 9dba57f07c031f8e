"""Exception hierarchy shared by all modules."""


class WiotError(Exception):
    """Base class for every error raised by this package."""


class FlowParseError(WiotError, ValueError):
    """A row of the flows CSV could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(WiotError, ValueError):
    """Input uses a code that is not part of the configured scheme."""


class SchemeError(WiotError, ValueError):
    """The region scheme itself is inconsistent, or a region cannot be mapped."""


class InputError(WiotError, ValueError):
    """Inputs are well-formed but inconsistent with each other."""


class ContractError(WiotError, ValueError):
    """A function was called in violation of its preconditions."""
