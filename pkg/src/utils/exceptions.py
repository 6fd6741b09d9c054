"""
Exception hierarchy shared by every layer.
The CLI maps these onto exit codes (validation -> 2, numerics -> 3).
"""
from typing import Optional


class TensorMPError(Exception):
    """Base class for all laboratory errors"""


class ConfigValidationError(TensorMPError, ValueError):
    """
    Raised when an experiment configuration fails schema validation
    """

    def __init__(self, message: str, issues: Optional[list] = None):
        self.issues = list(issues or [])
        if self.issues:
            message = f"{message}: " + "; ".join(self.issues)
        super().__init__(message)


class ConvergenceError(TensorMPError, ArithmeticError):
    """
    Raised when an iterative numerical method does not reach its tolerance
    """

    def __init__(self, message: str, residual: float = float('nan'), iterations: int = 0):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")


class QuadratureError(ConvergenceError):
    """Raised when a refined quadrature does not settle"""


class BudgetExceededError(TensorMPError, MemoryError):
    """Raised when a dense object would exceed the configured memory budget or dense cap"""


class LengthMismatchError(TensorMPError, ValueError):
    """Raised when two sequences that must agree in length do not"""


class EmpiricalOnlyError(TensorMPError, NotImplementedError):
    """Raised when a model has no closed-form moment profile"""


class NotInSobolevSpaceError(TensorMPError, ValueError):
    """Raised when a test function does not decay and has no finite Sobolev norm"""
