"""Exception types shared across the package.

ConfigError signals invalid user input (CLI exit code 2), NumericalError
and its subclasses signal solver failures (CLI exit code 3).
"""


class ConfigError(ValueError):
    """Invalid or inconsistent input parameters."""


class NumericalError(RuntimeError):
    """A solver failed to produce a valid result."""


class NoBoundStateError(NumericalError):
    """No discrete state exists for the requested branch."""


class NoDiscreteStateError(NumericalError):
    """A spectrum does not contain the requested discrete level."""


class CalibrationError(NumericalError):
    """A calibration matrix is singular or a fit did not converge."""
