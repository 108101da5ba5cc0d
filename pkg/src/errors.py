"""Exceptions raised by the pricing engine."""


class PricingError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PricingError, ValueError):
    """Invalid parameters, payoffs, grids or arguments."""


class ResonanceError(ValidationError):
    """A closed-form denominator vanishes for the given parameters."""


class UnsupportedPayoffError(PricingError):
    """The requested quantity is not defined for this payoff."""


class NoRootError(PricingError):
    """A root-finding target lies outside the attainable range."""


class NumericalError(PricingError, ArithmeticError):
    """A solver produced or would produce non-finite values."""


class QuadratureError(NumericalError):
    """Panel doubling did not reach the requested tolerance."""


class ConfigError(PricingError):
    """Malformed run configuration."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class AcceptanceError(PricingError):
    """One or more convergence checks failed."""
