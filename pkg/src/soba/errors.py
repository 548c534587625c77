"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters or mismatched dimensions."""


class InputError(ValueError):
    """Bad data handed to a learner (e.g. NaN features)."""


class ProtocolError(RuntimeError):
    """The predict/observe round protocol was violated."""


class GenerationError(RuntimeError):
    """A synthetic generator could not satisfy its postcondition."""


class ParseError(ValueError):
    """Malformed dataset file."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
