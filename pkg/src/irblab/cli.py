"""Command-line client.

Each subcommand builds an ExperimentConfig (file + flag overrides), runs the
matching pipeline either in-process or against a running service
(--server), and writes <cmd>_report.json plus <cmd>_data.csv into --out.

Exit codes: 0 ok, 2 config error, 3 simulation/calibration error, 4 fit
error, 5 classification inconclusive (the report is still written).
"""

import json
import os
import sys

import click
import httpx

from . import reports, service
from .config import ExperimentConfig, config_schema, load_config, parse_config
from .errors import (
    CalibrationError,
    ConfigError,
    FitError,
    InconclusiveClassification,
    IrbLabError,
    SimulationError,
)

EXIT_CODES = {
    ConfigError: 2,
    SimulationError: 3,
    CalibrationError: 3,
    FitError: 4,
    InconclusiveClassification: 5,
}

_REMOTE_EXIT = {"config": 2, "simulation": 3, "calibration": 3, "fit": 4, "inconclusive": 5}


def _exit_code(exc: IrbLabError) -> int:
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 3


def _print_schema(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    click.echo(json.dumps(config_schema(), indent=2))
    ctx.exit(0)


def common_options(fn):
    decorators = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="JSON config file; defaults apply when omitted."),
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None,
                     help="Master seed; overrides the config's rb.seed."),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                     help="Output directory (default: config out_dir or '.')."),
        click.option("--backend", type=click.Choice(["exact", "pulse"]), default=None,
                     help="Channel backend: ideal rotations or the pulse simulator."),
        click.option("--shots", default=None,
                     help="'exact' for analytic survival or a positive shot count."),
        click.option("--server", default=None, metavar="URL",
                     help="Run against a service at URL instead of in-process."),
        click.option("--print-schema", is_flag=True, callback=_print_schema,
                     expose_value=False, is_eager=True,
                     help="Print the config JSON schema and exit."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _build_config(config_path, backend, shots, out_dir) -> ExperimentConfig:
    cfg = load_config(config_path) if config_path else parse_config({})
    data = cfg.model_dump(mode="json")
    if backend is not None:
        data["backend"] = backend
    if shots is not None:
        if shots != "exact":
            try:
                shots = int(shots)
            except ValueError:
                raise ConfigError("--shots takes 'exact' or a positive integer")
        data["shots"] = shots
    if out_dir is not None:
        data["out_dir"] = out_dir
    return parse_config(data)


def _emit(report: dict, cfg: ExperimentConfig, name: str) -> tuple:
    out_dir = cfg.out_dir or "."
    rows = report.pop("csv_rows", None)
    json_path = os.path.join(out_dir, f"{name}_report.json")
    reports.write_json(json_path, report)
    csv_path = None
    if rows:
        csv_path = os.path.join(out_dir, f"{name}_data.csv")
        reports.write_csv(csv_path, rows)
    return json_path, csv_path


def _post(server: str, path: str, payload: dict) -> dict:
    try:
        response = httpx.post(f"{server.rstrip('/')}{path}", json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        raise SimulationError(f"service request failed: {exc}") from exc
    if response.status_code != 200:
        try:
            body = response.json()
        except ValueError:
            body = {}
        kind = body.get("error", "")
        message = body.get("message", response.text)
        click.echo(f"error ({kind or response.status_code}): {message}", err=True)
        sys.exit(_REMOTE_EXIT.get(kind, 2 if response.status_code == 422 else 3))
    return response.json()


def _run_experiment(name, runner, cfg, seed, server):
    if server:
        return _post(
            server,
            f"/{name}",
            {"config": cfg.model_dump(mode="json"), "seed": seed},
        )
    return runner(cfg, seed)


def _experiment_command(name: str, runner, summarize):
    @common_options
    def cmd(config_path, seed, out_dir, backend, shots, server):
        try:
            cfg = _build_config(config_path, backend, shots, out_dir)
            report = _run_experiment(name, runner, cfg, seed, server)
            json_path, csv_path = _emit(report, cfg, name.replace("-", "_"))
        except IrbLabError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc))
        click.echo(summarize(report))
        click.echo(f"wrote {json_path}" + (f" and {csv_path}" if csv_path else ""))

    cmd.__name__ = name.replace("-", "_")
    return cmd


def _rb_summary(report):
    fit = report["results"]["fit"]
    return (
        f"alpha={fit['alpha']:.6f}  r_clifford={fit['r_clifford']:.3e}  "
        f"r_generator={fit['r_generator']:.3e}"
    )


def _irb_summary(report):
    pairs = report["results"]["alpha_pairs"]
    first, last = pairs[0], pairs[-1]
    return (
        f"{len(pairs)} interleave points: alpha(n={first[0]})={first[1]:.6f} "
        f"... alpha(n={last[0]})={last[1]:.6f}"
    )


def _cal_summary(report):
    res = report["results"]
    return (
        f"converged={res['converged']} in {res['rounds_used']} rounds, "
        f"drag_lambda={res['drag_lambda']:.4f}"
    )


def _sweep_summary(report):
    times = report["results"]["gate_times_s"]
    return f"swept {len(times)} gate times from {times[0]*1e9:.3g} to {times[-1]*1e9:.3g} ns"


@click.group()
@click.option("--print-schema", is_flag=True, callback=_print_schema,
              expose_value=False, is_eager=True,
              help="Print the config JSON schema and exit.")
def main():
    """Iterative randomized benchmarking experiments on a simulated transmon."""


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve_cmd(host, port):
    """Run the HTTP service that the --server flag talks to."""
    import uvicorn

    uvicorn.run("irblab.service:app", host=host, port=port)


main.command("rb")(_experiment_command("rb", service.run_rb, _rb_summary))
main.command("irb")(_experiment_command("irb", service.run_irb, _irb_summary))
main.command("calibrate")(
    _experiment_command("calibrate", service.run_calibrate, _cal_summary)
)
main.command("sweep-gate-time")(
    _experiment_command("sweep-gate-time", service.run_sweep_gate_time, _sweep_summary)
)


def _pairs_from_csv(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != reports.CSV_HEADER:
            raise ConfigError(f"unexpected CSV header {header!r}")
        for line in fh:
            x, y, _err, series = line.strip().split(",")
            if series == "alpha_vs_n":
                pairs.append((int(float(x)), float(y)))
    if not pairs:
        raise ConfigError("CSV holds no alpha_vs_n rows to classify")
    return pairs


@main.command("classify")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@common_options
def classify_cmd(input_path, config_path, seed, out_dir, backend, shots, server):
    """Classify decay-vs-n data (an irb report JSON or its CSV) by AIC."""
    try:
        cfg = _build_config(config_path, backend, shots, out_dir)
        if input_path.endswith(".csv"):
            pairs = _pairs_from_csv(input_path)
        else:
            with open(input_path, encoding="utf-8") as fh:
                pairs = service.pairs_from_report(json.load(fh))
        if server:
            result = _post(server, "/classify", {"pairs": [list(p) for p in pairs]})
        else:
            result = service.run_classify(pairs)
        out = cfg.out_dir or "."
        json_path = os.path.join(out, "classify_report.json")
        reports.write_json(json_path, result)
        rows = [
            (i, result["rel_prob"][kind], 0.0, kind)
            for i, kind in enumerate(sorted(result["rel_prob"]))
        ]
        reports.write_csv(os.path.join(out, "classify_data.csv"), rows)
    except IrbLabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_code(exc))
    probs = ", ".join(f"{k}={v:.3g}" for k, v in sorted(result["rel_prob"].items()))
    click.echo(f"verdict: {result['verdict']} ({probs})")
    click.echo(f"wrote {json_path}")
    if result.get("flagged"):
        click.echo("classification flagged as inconclusive (AIC tie)", err=True)
        sys.exit(5)


if __name__ == "__main__":
    main()
