"""Exception types shared across modules."""


class ConvergenceError(ArithmeticError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class InfeasibleError(ValueError):
    """The requested operating point violates a stability constraint."""


class UnsupportedConfigurationError(ValueError):
    """A valid request this implementation deliberately does not handle."""
