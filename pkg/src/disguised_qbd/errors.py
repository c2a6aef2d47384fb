"""Exception types raised by the solver, oracle and CLI."""


class SingularMatrixError(ArithmeticError):
    """A pivot fell below the relative singularity threshold."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class ConvergenceError(RuntimeError):
    """An iterative method ran out of iterations."""

    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class InstabilityError(ValueError):
    """The drift condition fails; no stationary distribution exists."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class NearInstabilityError(RuntimeError):
    """Truncation could not push the tail mass below tolerance."""

    def __init__(self, message, max_level, tail_mass):
        super().__init__(message)
        self.max_level = max_level
        self.tail_mass = tail_mass


class InvalidStateError(ValueError):
    pass


class ConfigError(ValueError):
    pass
