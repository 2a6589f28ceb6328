class TIMarginalError(Exception):
    """Base class for errors raised by this package."""


class StructuralError(TIMarginalError, ValueError):
    """Inputs whose shapes or dimensions do not fit together."""


class DomainError(TIMarginalError, ValueError):
    """Well-formed inputs outside an operation's domain."""


class ResourceError(TIMarginalError):
    """A computation would exceed its configured budget."""

    def __init__(self, message: str, needed: int = None, budget: int = None):
        super().__init__(message)
        self.needed = needed
        self.budget = budget
