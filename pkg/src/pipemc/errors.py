"""Exception hierarchy shared by the solver, link layer and CLI."""


class PipeMCError(Exception):
    """Base class for all package errors."""


class ValidationError(PipeMCError, ValueError):
    """Input violates a documented precondition or invariant.

    The CLI maps this to exit code 1.
    """


class ResolutionError(ValidationError):
    """Requested cell size is too coarse for the duct."""


class NumericalError(PipeMCError, RuntimeError):
    """A numerical procedure failed. The CLI maps this to exit code 2."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class DivergenceError(NumericalError):
    def __init__(self, message, equation=None):
        super().__init__(message)
        self.equation = equation
