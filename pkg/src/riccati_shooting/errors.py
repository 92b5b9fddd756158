"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class IntegrationError(RuntimeError):
    """The ODE integrator could not advance (step underflow without blow-up)."""


class ContractionError(RuntimeError):
    """Picard iterates stopped contracting."""

    def __init__(self, message, distances):
        super().__init__(message)
        self.distances = list(distances)


class BracketError(RuntimeError):
    """Bracketing or bisection on the shooting parameter failed."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class HorizonError(RuntimeError):
    """A Monte Carlo horizon is too short for the truncated tail to be negligible."""


class SimulationError(RuntimeError):
    """A path simulation violated its own safety limits (e.g. clamp rate)."""


class ConfigError(ValueError):
    """Invalid run configuration."""
