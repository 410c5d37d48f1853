"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code (see cli.py), so raising the right
type is part of the external contract, not just diagnostics.
"""


class IrbLabError(Exception):
    """Base class for all package errors."""


class ConfigError(IrbLabError):
    """Invalid or inconsistent configuration / arguments (exit code 2)."""


class SimulationError(IrbLabError):
    """Numerical propagation failed, e.g. integrator step underflow (exit code 3)."""


class FitError(IrbLabError):
    """A least-squares fit did not converge or the design is degenerate (exit code 4)."""

    def __init__(self, message, raw_data=None):
        super().__init__(message)
        self.raw_data = raw_data


class CalibrationError(IrbLabError):
    """Closed-loop calibration failed to converge (exit code 3 family)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class InconclusiveClassification(IrbLabError):
    """Model selection could not separate candidates (exit code 5, non-fatal)."""
