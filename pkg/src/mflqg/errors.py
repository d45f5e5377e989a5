"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain a function is defined on."""


class AssumptionError(ValueError):
    """A standing model assumption fails (e.g. the control weight is not positive)."""


class FiniteEscapeError(RuntimeError):
    """A backward Riccati or moment integration crossed the divergence threshold."""

    def __init__(self, time: float, component: str = "phi"):
        self.time = float(time)
        self.component = component
        super().__init__(
            f"finite escape detected near t = {time:.6g} ({component} diverged)"
        )


class SimulationDivergedError(RuntimeError):
    """A Monte Carlo particle state became non-finite."""


class ConfigError(ValueError):
    """Configuration text could not be parsed."""
