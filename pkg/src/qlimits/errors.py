"""Exception hierarchy shared across the package."""


class QlimitsError(Exception):
    """Base class for all package errors."""


class ConfigError(QlimitsError):
    """Invalid configuration or input validation failure (CLI exit code 2)."""


class DimensionMismatchError(QlimitsError):
    """Predictor and data dimensions disagree."""


class SingularSystemError(QlimitsError):
    """An unregularized linear system is rank-deficient; refusing to pseudo-solve."""


class KernelNotPSDError(QlimitsError):
    """Kernel matrix violates positive semidefiniteness beyond tolerance."""


class DivergenceError(QlimitsError):
    """Gradient descent diverged (risk rose repeatedly)."""

    def __init__(self, step_size: float, n_increases: int):
        self.step_size = step_size
        self.n_increases = n_increases
        super().__init__(
            f"gradient descent diverged: empirical risk increased "
            f"{n_increases} consecutive iterations at step size {step_size!r}"
        )


class NumericalError(QlimitsError):
    """A numerical quality gate failed (e.g. linear-system residual too large)."""
