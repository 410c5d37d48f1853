"""Report JSON/CSV emission: atomicity, strict floats, fixed formatting."""

import json
import math
import os

import numpy as np
import pytest

from irblab import reports
from irblab.config import parse_config
from irblab.protocols import DecayFit, DecaySeries


def _fit(**kw):
    base = dict(
        amplitude=0.5,
        alpha=0.97,
        offset=0.5,
        alpha_stderr=0.001,
        rss=1e-8,
        n_points=7,
    )
    base.update(kw)
    return DecayFit(**base)


def test_write_json_round_trip(tmp_path):
    path = tmp_path / "sub" / "report.json"  # directory is created on demand
    reports.write_json(path, {"a": 1, "b": [1.5, None]})
    text = path.read_text()
    assert text.endswith("\n")
    assert json.loads(text) == {"a": 1, "b": [1.5, None]}
    assert [p for p in os.listdir(tmp_path / "sub") if p.endswith(".tmp")] == []


def test_write_json_rejects_non_finite(tmp_path):
    with pytest.raises(ValueError):
        reports.write_json(tmp_path / "x.json", {"bad": float("nan")})
    assert not (tmp_path / "x.json").exists()


def test_write_csv_formatting(tmp_path):
    path = tmp_path / "data.csv"
    reports.write_csv(path, [(2, 1.0 / 3.0, 0.0, "rb"), (10, 0.25, "", "x")])
    lines = path.read_text().split("\n")
    assert lines[0] == "x,y,y_err,series"
    assert lines[1] == "2,0.333333333333,0,rb"
    assert lines[2] == "10,0.25,,x"
    assert lines[-1] == ""  # trailing newline


def test_fit_dict_maps_infinities_to_null():
    degenerate = _fit(alpha=1.0, alpha_stderr=math.inf, degenerate=True)
    d = reports.fit_dict(degenerate)
    assert d["alpha_stderr"] is None
    assert d["alpha_ci95"] == [None, None]
    assert d["degenerate"] is True
    json.dumps(d, allow_nan=False)  # must already be strict-JSON safe

    finite = reports.fit_dict(_fit())
    assert finite["alpha_stderr"] == pytest.approx(0.001)
    assert finite["r_clifford"] == pytest.approx(0.015)


def test_series_serialization():
    series = DecaySeries([2, 4], [[1.0, 0.8], [0.9, 0.7]])
    d = reports.series_dict(series)
    assert d["lengths"] == [2, 4]
    assert d["num_seeds"] == 2
    assert d["mean"] == pytest.approx([0.95, 0.75])
    rows = reports.series_rows(series, "rb")
    assert rows[0][0] == 2 and rows[0][3] == "rb"


def test_make_report_fields():
    cfg = parse_config({"rb": {"num_seeds": 3}})
    report = reports.make_report("rb", cfg, {"x": 1}, seed=42, elapsed_s=1.23456)
    assert report["schema_version"] == 1
    assert report["kind"] == "rb"
    assert report["seed"] == 42
    assert report["elapsed_s"] == 1.235
    assert report["results"] == {"x": 1}
    assert report["config"]["rb"]["num_seeds"] == 3
    assert isinstance(report["package_version"], str)
    assert "T" in report["created_utc"]
    json.dumps(report, allow_nan=False)


def test_irb_rows_blank_stderr_for_degenerate_alpha():
    from irblab.protocols import IrbResult

    series = DecaySeries([2, 4, 8], np.full((2, 3), 0.995))
    result = IrbResult(
        repeats=(0, 1),
        series=(series, series),
        fits=(_fit(), _fit(alpha=1.0, alpha_stderr=math.inf, degenerate=True)),
        target=("X90",),
    )
    rows = reports.irb_rows(result)
    alpha_rows = [r for r in rows if r[3] == "alpha_vs_n"]
    assert len(alpha_rows) == 2
    assert alpha_rows[0][2] == pytest.approx(0.001)
    assert alpha_rows[1][2] == ""  # non-finite stderr becomes an empty cell
    decay_rows = [r for r in rows if r[3].startswith("decay_n=")]
    assert len(decay_rows) == 6
