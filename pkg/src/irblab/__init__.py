"""Iterative randomized benchmarking on a simulated three-level transmon.

Core building blocks live in their own modules: quantum channels
(`channels`), the 24-element Clifford group (`cliffords`), pulse shapes
(`pulses`), the Lindblad propagator (`transmon`), the exact/pulse channel
backends (`backends`), RB/IRB protocols (`protocols`), error-amplification
calibration (`calibration`), and AIC model selection (`modelsel`). The
`service` module wraps the experiment pipelines in a FastAPI app, and `cli`
is a thin client over the same runners.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    ConfigError,
    FitError,
    InconclusiveClassification,
    IrbLabError,
    SimulationError,
)

__all__ = [
    "CalibrationError",
    "ConfigError",
    "FitError",
    "InconclusiveClassification",
    "IrbLabError",
    "SimulationError",
    "__version__",
]
