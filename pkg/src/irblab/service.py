"""HTTP service wrapping the experiment runners.

The run_* functions are the single implementation of each experiment
pipeline: config in, report dict out. The FastAPI app exposes them over
HTTP; the command-line client calls the same functions in-process when no
server is given, so both paths produce identical reports.
"""

import time
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import reports
from .calibration import calibrate_all, gate_time_sweep
from .config import (
    ExperimentConfig,
    build_backend,
    config_schema,
    to_device,
    to_irb_config,
    to_noise,
    to_rb_config,
    _shots,
)
from .backends import PulseBackend
from .errors import (
    CalibrationError,
    ConfigError,
    FitError,
    InconclusiveClassification,
    IrbLabError,
    SimulationError,
)
from .modelsel import classify, require_conclusive
from .protocols import irb_experiment, rb_experiment
from .pulses import GateSpec, area_condition_amplitude

import numpy as np


def _effective_seed(cfg: ExperimentConfig, seed: Optional[int]) -> int:
    return cfg.rb.seed if seed is None else int(seed)


def run_rb(cfg: ExperimentConfig, seed: Optional[int] = None) -> dict:
    seed = _effective_seed(cfg, seed)
    t0 = time.perf_counter()
    result = rb_experiment(to_rb_config(cfg, seed), build_backend(cfg))
    report = reports.make_report(
        "rb", cfg, reports.rb_results(result), seed=seed, elapsed_s=time.perf_counter() - t0
    )
    report["csv_rows"] = reports.rb_rows(result)
    return report


def run_irb(cfg: ExperimentConfig, seed: Optional[int] = None) -> dict:
    seed = _effective_seed(cfg, seed)
    t0 = time.perf_counter()
    result = irb_experiment(to_irb_config(cfg, seed), build_backend(cfg))
    report = reports.make_report(
        "irb", cfg, reports.irb_results(result), seed=seed, elapsed_s=time.perf_counter() - t0
    )
    report["csv_rows"] = reports.irb_rows(result)
    return report


def _calibration_backend(cfg: ExperimentConfig) -> PulseBackend:
    """Calibration is pulse-level by nature, whatever cfg.backend says."""
    g = cfg.gates
    specs = {}
    for kind in ("X90", "X180"):
        spec = GateSpec(
            kind,
            g.gate_length_s,
            amplitude=g.amplitude_rad_per_s if kind == "X90" else None,
            drag_lambda=g.drag_lambda,
            buffer=g.buffer_s,
        )
        if cfg.calibrate.initial_amplitude_error:
            amp = spec.amplitude if spec.amplitude is not None else area_condition_amplitude(spec)
            spec = spec.with_updates(
                amplitude=amp * (1.0 + cfg.calibrate.initial_amplitude_error)
            )
        specs[kind] = spec
    return PulseBackend(
        to_device(cfg), to_noise(cfg), specs, rtol=1e-8, atol=1e-10
    )


def run_calibrate(cfg: ExperimentConfig, seed: Optional[int] = None) -> dict:
    seed = _effective_seed(cfg, seed)
    shots = _shots(cfg)
    rng = np.random.default_rng(seed) if shots is not None else None
    t0 = time.perf_counter()
    grid = cfg.calibrate.lambda_grid
    outcome = calibrate_all(
        _calibration_backend(cfg),
        n_values=tuple(cfg.calibrate.n_values),
        threshold=cfg.calibrate.threshold_rad,
        max_rounds=cfg.calibrate.max_rounds,
        lambda_grid=None if grid is None else tuple(grid),
        shots=shots,
        rng=rng,
    )
    report = reports.make_report(
        "calibrate",
        cfg,
        reports.calibration_results(outcome),
        seed=seed,
        elapsed_s=time.perf_counter() - t0,
    )
    report["csv_rows"] = reports.calibration_rows(outcome)
    return report


def run_sweep_gate_time(cfg: ExperimentConfig, seed: Optional[int] = None) -> dict:
    seed = _effective_seed(cfg, seed)
    t0 = time.perf_counter()
    sweep = gate_time_sweep(
        [t * 1e-9 for t in cfg.sweep.gate_times_ns],
        to_device(cfg),
        drag_lambda=cfg.sweep.drag_lambda,
        dephasing_k=cfg.sweep.dephasing_k,
    )
    report = reports.make_report(
        "sweep-gate-time",
        cfg,
        reports.sweep_results(sweep),
        seed=seed,
        elapsed_s=time.perf_counter() - t0,
    )
    report["csv_rows"] = reports.sweep_rows(sweep)
    return report


def run_classify(pairs, strict: bool = False) -> dict:
    report = classify([(int(n), float(a)) for n, a in pairs])
    if strict:
        require_conclusive(report)
    out = reports.classification_results(report)
    out["flagged"] = report.tie_broken
    return out


def pairs_from_report(report: dict):
    try:
        return report["results"]["alpha_pairs"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(
            "report lacks results.alpha_pairs; pass an irb report or explicit pairs"
        ) from exc


# --- HTTP layer -------------------------------------------------------------

_ERROR_KIND = {
    ConfigError: ("config", 422),
    SimulationError: ("simulation", 500),
    FitError: ("fit", 500),
    CalibrationError: ("calibration", 500),
    InconclusiveClassification: ("inconclusive", 409),
}


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ExperimentConfig = Field(default_factory=ExperimentConfig)
    seed: Optional[int] = None


class ClassifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pairs: Optional[list[list[float]]] = None
    report: Optional[dict] = None
    strict: bool = False


def create_app() -> FastAPI:
    app = FastAPI(title="irblab", version=reports.package_version())

    @app.exception_handler(IrbLabError)
    async def _irblab_error(request: Request, exc: IrbLabError):
        for cls, (kind, status) in _ERROR_KIND.items():
            if isinstance(exc, cls):
                return JSONResponse(
                    {"error": kind, "message": str(exc)}, status_code=status
                )
        return JSONResponse(
            {"error": "internal", "message": str(exc)}, status_code=500
        )  # pragma: no cover

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": reports.package_version()}

    @app.get("/schema")
    async def schema():
        return config_schema()

    @app.post("/rb")
    async def rb(req: RunRequest):
        return run_rb(req.config, req.seed)

    @app.post("/irb")
    async def irb(req: RunRequest):
        return run_irb(req.config, req.seed)

    @app.post("/calibrate")
    async def calibrate(req: RunRequest):
        return run_calibrate(req.config, req.seed)

    @app.post("/sweep-gate-time")
    async def sweep(req: RunRequest):
        return run_sweep_gate_time(req.config, req.seed)

    @app.post("/classify")
    async def classify_endpoint(req: ClassifyRequest):
        pairs = req.pairs
        if pairs is None:
            if req.report is None:
                raise ConfigError("provide either pairs or a report")
            pairs = pairs_from_report(req.report)
        return run_classify(pairs, strict=req.strict)

    return app


app = create_app()
