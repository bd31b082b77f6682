"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class FormatError(ValueError):
    """A file does not follow the PPCT1 layout."""


class DivergenceError(RuntimeError):
    """The solver objective blew up.

    ``parameter`` names the setting most likely responsible so callers can
    report it without parsing the message.
    """

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter
