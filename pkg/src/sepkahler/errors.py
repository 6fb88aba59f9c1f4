"""Exception types shared across the engine."""


class SepKahlerError(Exception):
    """Base class for engine errors."""


class DomainError(SepKahlerError):
    """A tracked factor vanishes at the requested point."""

    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class InvalidStructure(SepKahlerError):
    """The defining tensors do not span an image of dimension m+1."""

    def __init__(self, message, rank=None, expected=None):
        super().__init__(message)
        self.rank = rank
        self.expected = expected


class NotInImage(SepKahlerError):
    """A tensor does not lie in the image of the structure."""


class Unsupported(SepKahlerError):
    """Input outside the cases covered by the solver."""


class LogTermError(SepKahlerError):
    """A double integral would produce a logarithmic term."""


class ParseError(SepKahlerError):
    """Malformed JSON input."""


class Cancelled(SepKahlerError):
    """Raised when a cancellation token fires."""


class CancelToken:
    """Cooperative cancellation flag checked inside long reductions."""

    def __init__(self):
        self.cancelled = False

    def cancel(self):
        self.cancelled = True

    def check(self):
        if self.cancelled:
            raise Cancelled("operation cancelled")


def check_token(token):
    if token is not None:
        token.check()
