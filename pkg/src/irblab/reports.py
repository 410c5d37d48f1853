"""Report assembly and file emission.

Reports are self-contained JSON documents: schema version, the full config
echo, the master seed, and the results. Rerunning from the embedded config
and seed reproduces the results bit-for-bit in exact-shot mode. Plot data
goes to CSV with fixed columns (x, y, y_err, series), POSIX line endings,
and %.12g floats, so files diff cleanly across platforms and locales.
"""

import json
import math
import os
import tempfile
from datetime import datetime, timezone
from importlib import metadata

from .calibration import CalibrationOutcome, GateTimeSweep
from .config import ExperimentConfig
from .modelsel import ModelReport
from .protocols import DecayFit, DecaySeries, IrbResult, RbResult

SCHEMA_VERSION = 1
CSV_HEADER = "x,y,y_err,series"


def package_version() -> str:
    try:
        return metadata.version("irblab")
    except metadata.PackageNotFoundError:  # pragma: no cover - editable quirk
        return "unknown"


def make_report(
    kind: str,
    config: ExperimentConfig,
    results: dict,
    *,
    seed: int,
    elapsed_s: float,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "package_version": package_version(),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "elapsed_s": round(float(elapsed_s), 3),
        "seed": int(seed),
        "config": config.model_dump(mode="json"),
        "results": results,
    }


def _atomic_write(path, text: str):
    """Write-temp-then-rename so readers never observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload: dict):
    # strict JSON: serializers map inf/nan to None, and this enforces it
    _atomic_write(path, json.dumps(payload, indent=2, allow_nan=False) + "\n")


def _finite(value):
    """Non-finite floats (unbounded CI of a degenerate fit) become null."""
    value = float(value)
    return value if math.isfinite(value) else None


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".12g")


def write_csv(path, rows):
    """rows: iterables of (x, y, y_err, series_label)."""
    lines = [CSV_HEADER]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


# --- result serializers ---------------------------------------------------


def fit_dict(fit: DecayFit) -> dict:
    lo, hi = fit.alpha_ci95
    return {
        "amplitude": fit.amplitude,
        "alpha": fit.alpha,
        "offset": fit.offset,
        "alpha_stderr": _finite(fit.alpha_stderr),
        "alpha_ci95": [_finite(lo), _finite(hi)],
        "rss": fit.rss,
        "n_points": fit.n_points,
        "degenerate": fit.degenerate,
        "r_clifford": fit.r_clifford,
        "r_generator": fit.r_generator,
    }


def series_dict(series: DecaySeries) -> dict:
    return {
        "lengths": series.lengths.tolist(),
        "mean": series.mean.tolist(),
        "stderr": series.stderr.tolist(),
        "num_seeds": int(series.survivals.shape[0]),
    }


def series_rows(series: DecaySeries, label: str):
    return [
        (int(l), m, s, label)
        for l, m, s in zip(series.lengths, series.mean, series.stderr)
    ]


def rb_results(result: RbResult) -> dict:
    return {"series": series_dict(result.series), "fit": fit_dict(result.fit)}


def rb_rows(result: RbResult):
    return series_rows(result.series, "rb")


def irb_results(result: IrbResult) -> dict:
    return {
        "target": list(result.target),
        "repeats": list(result.repeats),
        "alpha_pairs": [[n, a] for n, a in result.pairs()],
        "fits": {str(n): fit_dict(f) for n, f in result},
        "series": {str(n): series_dict(s) for n, s in zip(result.repeats, result.series)},
    }


def irb_rows(result: IrbResult):
    rows = []
    for n, series in zip(result.repeats, result.series):
        rows.extend(series_rows(series, f"decay_n={n}"))
    for (n, fit) in result:
        err = fit.alpha_stderr if math.isfinite(fit.alpha_stderr) else ""
        rows.append((int(n), fit.alpha, err, "alpha_vs_n"))
    return rows


def classification_results(report: ModelReport) -> dict:
    return report.to_dict()


def calibration_results(outcome: CalibrationOutcome) -> dict:
    return {
        "converged": outcome.converged,
        "rounds_used": outcome.rounds_used,
        "drag_lambda": outcome.drag_lambda,
        "rounds": outcome.rounds,
        "amplitudes": {
            kind: spec.amplitude for kind, spec in sorted(outcome.specs.items())
        },
    }


def calibration_rows(outcome: CalibrationOutcome):
    rows = []
    for row in outcome.rounds:
        idx = row["round"]
        for kind in ("X180", "X90"):
            key = f"epsilon_{kind}"
            if key in row:
                rows.append((idx, row[key], 0.0, f"epsilon_{kind}"))
        if "drag_lambda" in row:
            rows.append((idx, row["drag_lambda"], 0.0, "drag_lambda"))
    return rows


def sweep_results(sweep: GateTimeSweep) -> dict:
    return {
        "gate_times_s": sweep.gate_times.tolist(),
        "errors": {label: arr.tolist() for label, arr in sorted(sweep.errors.items())},
        "coherence_limits": sweep.coherence_limits.tolist(),
    }


def sweep_rows(sweep: GateTimeSweep):
    rows = []
    for label in sorted(sweep.errors):
        rows.extend(
            (t, e, 0.0, label) for t, e in zip(sweep.gate_times, sweep.errors[label])
        )
    rows.extend(
        (t, e, 0.0, "coherence_limit")
        for t, e in zip(sweep.gate_times, sweep.coherence_limits)
    )
    return rows
