class DomainError(Exception):
    """Raised when a mathematical precondition is violated (non-interior point, infinite divergence, zero-mass label)"""

    def __init__(self, message: str):
        self.message = message
        super().__init__(f"Domain error: {self.message}")


class ShapeError(Exception):
    """Raised when parameter shapes and data dimensions do not agree"""

    def __init__(self, message: str):
        self.message = message
        super().__init__(f"Shape error: {self.message}")


class NonConvergence(Exception):
    """Raised when an iterative solver exhausts its iteration budget"""

    def __init__(self, routine: str, iterations: int, residual: float):
        self.routine = routine
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{self.routine} did not converge after {self.iterations} iterations "
            f"(last residual {self.residual:.3e})"
        )
