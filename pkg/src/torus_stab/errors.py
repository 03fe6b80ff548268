"""Exception types shared across the package."""


class TorusStabError(Exception):
    """Base class for all package errors."""


class ConfigError(TorusStabError):
    """Invalid configuration value or malformed config file."""


class GridMismatchError(TorusStabError):
    """Operands live on different grids."""


class UnsupportedOrderError(TorusStabError):
    """Derivative order outside the supported range."""


class DivergenceError(TorusStabError):
    """Simulation norm guard tripped.

    Carries the time at which the blow-up was detected.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class WeightBoundError(TorusStabError):
    """Constructed Carleman weight violates the derivative bounds."""

    def __init__(self, message, dpsi_min=None, dpsi_max=None):
        super().__init__(message)
        self.dpsi_min = dpsi_min
        self.dpsi_max = dpsi_max


class DegenerateInputError(TorusStabError):
    """Inequality evaluator called with a vanishing right-hand side."""
