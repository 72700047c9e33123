"""Exception types shared across the package."""


class RangeError(IndexError):
    """An index or bound lies outside the valid domain."""


class DomainError(ValueError):
    """A numeric parameter lies outside its mathematical domain."""


class DuplicateValueError(ValueError):
    """The input array holds repeated values and tie breaking is disabled."""


class ResourceError(RuntimeError):
    """A request exceeds the built-in size caps."""


class SolverError(RuntimeError):
    """A numeric solver failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FormatError(ValueError):
    """A serialized blob or container is malformed."""
