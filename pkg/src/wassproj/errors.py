"""Exception types raised by wassproj."""


class WassprojError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(WassprojError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(WassprojError, ValueError):
    """A point lies outside the domain of the function being evaluated."""


class SingularFitError(WassprojError, ValueError):
    """A least-squares design or linear system is rank deficient."""


class NumericError(WassprojError, RuntimeError):
    """An iterative solver failed to converge.

    Attributes
    ----------
    diagnostics : dict
        Solver state at the point of failure (iterations, residuals, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ParseError(WassprojError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
