"""JSON experiment configuration: schema, loading, and core-object builders.

The schema is deliberately strict (unknown keys rejected) so a typo in a
config file fails before any computation starts. Field names carry their
unit as a suffix; everything has a default, so `{}` is a valid config.
"""

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import cliffords
from .backends import ExactBackend, PulseBackend
from .errors import ConfigError
from .protocols import IrbConfig, RbConfig, default_lengths
from .pulses import GateSpec
from .transmon import DeviceParams, NoiseConfig


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DeviceSection(_Section):
    """Transmon parameters; defaults follow the benchmarked device."""

    qubit_freq_hz: float = Field(5.0154e9, gt=0)
    anharmonicity_hz: float = Field(-323e6, lt=0)
    t1_s: float = Field(45e-6, gt=0)
    t2_s: float = Field(53e-6, gt=0)


class NoiseSection(_Section):
    decoherence: bool = True
    drive_dephasing_k: float = Field(0.0, ge=0)
    overrotation_epsilon_rad: float = 0.0
    overrotation_target: str = "X90"
    axis_skew_rad: float = 0.0
    drive_filter_tau_s: float = Field(0.0, ge=0)


class GateSection(_Section):
    gate_length_s: float = Field(16.7e-9, gt=0)
    buffer_s: float = Field(0.0, ge=0)
    drag_lambda: float = 0.0
    amplitude_rad_per_s: Optional[float] = Field(
        None, description="X90 peak drive amplitude; None derives it from the area condition"
    )


class RbSection(_Section):
    lengths: Optional[list[int]] = Field(
        None, description="Clifford sequence lengths; None selects the default log grid"
    )
    num_seeds: int = Field(35, ge=1)
    shots: int | Literal["exact"] = "exact"
    seed: int = Field(0, ge=0, description="master seed; overridden by --seed/request seed")


class IrbSection(_Section):
    target: list[str] = Field(default_factory=lambda: ["X90"])
    repeats: Optional[list[int]] = Field(
        None, description="interleave counts n; None selects 0..16"
    )


class SweepSection(_Section):
    gate_times_ns: list[float] = Field(
        default_factory=lambda: [10.0, 13.3, 16.7, 20.0, 30.0, 40.0, 50.0, 60.0]
    )
    drag_lambda: float = 0.5
    dephasing_k: float = Field(0.01, ge=0)


class CalibrateSection(_Section):
    n_values: list[int] = Field(default_factory=lambda: list(range(13)))
    threshold_rad: float = Field(5e-4, gt=0)
    max_rounds: int = Field(10, ge=1)
    lambda_grid: Optional[list[float]] = Field(
        default_factory=lambda: [round(0.1 * i, 1) for i in range(21)]
    )
    initial_amplitude_error: float = Field(
        0.0, description="fractional X-amplitude detuning applied before the loop"
    )


class ExperimentConfig(_Section):
    backend: Literal["exact", "pulse"] = "exact"
    shots: int | Literal["exact"] | None = Field(
        None, description="overrides rb.shots when set"
    )
    out_dir: Optional[str] = None
    device: DeviceSection = Field(default_factory=DeviceSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    gates: GateSection = Field(default_factory=GateSection)
    rb: RbSection = Field(default_factory=RbSection)
    irb: IrbSection = Field(default_factory=IrbSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    calibrate: CalibrateSection = Field(default_factory=CalibrateSection)

    @model_validator(mode="after")
    def _check_pulse_kinds(self):
        # enforced here (not in parse_config) so configs arriving through
        # the HTTP request models get the same treatment
        if self.noise.overrotation_target not in cliffords.PULSE_KINDS:
            raise ValueError(
                f"overrotation_target must be one of {cliffords.PULSE_KINDS}"
            )
        for kind in self.irb.target:
            if kind not in cliffords.PULSE_KINDS:
                raise ValueError(f"unknown interleave target {kind!r}")
        return self


def config_schema() -> dict:
    return ExperimentConfig.model_json_schema()


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(data)


def to_device(cfg: ExperimentConfig) -> DeviceParams:
    d = cfg.device
    return DeviceParams(
        qubit_freq=d.qubit_freq_hz,
        anharmonicity=d.anharmonicity_hz,
        t1=d.t1_s,
        t2=d.t2_s,
    )


def to_noise(cfg: ExperimentConfig) -> NoiseConfig:
    n = cfg.noise
    return NoiseConfig(
        decoherence=n.decoherence,
        drive_dephasing_k=n.drive_dephasing_k,
        overrotation_epsilon=n.overrotation_epsilon_rad,
        overrotation_target=n.overrotation_target,
        axis_skew=n.axis_skew_rad,
        drive_filter_tau=n.drive_filter_tau_s,
    )


def _shots(cfg: ExperimentConfig):
    value = cfg.shots if cfg.shots is not None else cfg.rb.shots
    if value == "exact":
        return None
    if int(value) < 1:
        raise ConfigError("shots must be a positive count or 'exact'")
    return int(value)


def to_rb_config(cfg: ExperimentConfig, seed: int | None = None) -> RbConfig:
    lengths = cfg.rb.lengths if cfg.rb.lengths is not None else default_lengths()
    return RbConfig(
        lengths=tuple(lengths),
        num_seeds=cfg.rb.num_seeds,
        shots=_shots(cfg),
        seed=cfg.rb.seed if seed is None else seed,
    )


def to_irb_config(cfg: ExperimentConfig, seed: int | None = None) -> IrbConfig:
    repeats = cfg.irb.repeats if cfg.irb.repeats is not None else range(17)
    return IrbConfig(
        rb=to_rb_config(cfg, seed),
        target=tuple(cfg.irb.target),
        repeats=tuple(repeats),
    )


def build_backend(cfg: ExperimentConfig):
    device = to_device(cfg)
    noise = to_noise(cfg)
    g = cfg.gates
    if cfg.backend == "exact":
        return ExactBackend(
            noise, device, gate_length=g.gate_length_s, buffer=g.buffer_s
        )
    specs = None
    if g.amplitude_rad_per_s is not None:
        specs = {
            "X90": GateSpec(
                "X90",
                g.gate_length_s,
                amplitude=g.amplitude_rad_per_s,
                drag_lambda=g.drag_lambda,
                buffer=g.buffer_s,
            )
        }
    return PulseBackend(
        device,
        noise,
        specs,
        gate_length=g.gate_length_s,
        buffer=g.buffer_s,
        drag_lambda=g.drag_lambda,
    )
