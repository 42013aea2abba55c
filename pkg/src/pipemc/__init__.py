"""Molecular-communication channel simulator for an L-shaped duct with a side branch."""

from .errors import (ConvergenceError, DivergenceError, NumericalError, PipeMCError,
                     ResolutionError, ValidationError)

__version__ = "0.1.0"

__all__ = ["PipeMCError", "ValidationError", "ResolutionError", "NumericalError",
           "ConvergenceError", "DivergenceError", "__version__"]
