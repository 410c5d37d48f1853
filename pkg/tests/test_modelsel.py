"""AIC model selection: hand-computed values, tie-breaking, verdicts."""

import math

import numpy as np
import pytest

from irblab.errors import FitError, InconclusiveClassification
from irblab.modelsel import (
    ModelSpec,
    TIE_BREAK_DELTA,
    aic,
    classify,
    fit_model,
    overrotation_alpha_exact,
    overrotation_alpha_series,
    relative_probs,
    require_conclusive,
)


# ---------------------------------------------------------------------------
# hand-computed AIC triples (oracles evaluated by hand, not with the code)


def test_aic_unit_ratio():
    # 17 ln(17/17) + 2*2 + 2*2*3/(17-2-1) = 0 + 4 + 12/14
    assert aic(17.0, 17, 2) == pytest.approx(4.0 + 12.0 / 14.0, abs=1e-9)
    assert aic(17.0, 17, 2) == pytest.approx(4.857142857142857, abs=1e-9)


def test_aic_e_ratio():
    # R = 17e: 17 ln(e) + 4 + 12/14 = 17 + 4.857142...
    assert aic(17.0 * math.e, 17, 2) == pytest.approx(21.857142857142858, abs=1e-9)


def test_aic_three_parameter_penalty():
    # k = 3, m = 17: penalty terms 2k + 2k(k+1)/(m-k-1) = 6 + 24/13
    assert aic(17.0, 17, 3) == pytest.approx(6.0 + 24.0 / 13.0, abs=1e-9)


def test_aic_scale_shift_identity(rng):
    """Scaling residuals by c shifts C by m ln(c^2) exactly."""
    for _ in range(20):
        r = float(rng.uniform(1e-8, 10.0))
        m = int(rng.integers(6, 40))
        k = int(rng.integers(2, 4))
        c = float(rng.uniform(0.1, 10.0))
        assert aic(c**2 * r, m, k) == pytest.approx(aic(r, m, k) + m * math.log(c**2), abs=1e-9)


def test_aic_rejects_too_few_points():
    with pytest.raises(FitError):
        aic(1.0, 3, 2)


def test_aic_rejects_zero_rss():
    with pytest.raises(FitError, match="zero residual"):
        aic(0.0, 17, 2)


def test_relative_probs():
    assert relative_probs([10.0, 10.0, 10.0]) == [1.0, 1.0, 1.0]
    p = relative_probs([10.0, 12.0])
    assert p[0] == 1.0
    assert p[1] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_relative_probs_max_is_one(rng):
    for _ in range(50):
        c = rng.uniform(-50, 50, size=3)
        p = relative_probs(c)
        assert max(p) == 1.0
        assert all(0 < v <= 1 for v in p)


# ---------------------------------------------------------------------------
# closed-form alpha of a repeated overrotation


def test_alpha_exact_at_zero_repeats():
    assert overrotation_alpha_exact(0.37, 0) == 1.0


def test_alpha_exact_single_application():
    # (2 cos(pi/64) + 1)/3, evaluated by hand
    assert overrotation_alpha_exact(np.pi / 64, 1) == pytest.approx(0.9991969, abs=1e-7)


def test_alpha_exact_vs_series_divergence():
    """The small-angle series and the exact form disagree beyond n = 1."""
    eps = np.pi / 64
    exact = overrotation_alpha_exact(eps, 4)
    series = overrotation_alpha_series(eps, 4)
    assert exact == pytest.approx((2 * np.cos(np.pi / 16) + 1) / 3, abs=1e-12)
    assert exact == pytest.approx(0.987190, abs=1e-6)
    assert series == pytest.approx(1 - 28 * eps**2 / 3, abs=1e-12)
    assert series == pytest.approx(0.977510, abs=1e-6)
    assert abs(exact - series) > 5e-3  # documented inconsistency between the forms
    # they agree at n = 1 to fourth order
    assert overrotation_alpha_series(eps, 1) == pytest.approx(
        overrotation_alpha_exact(eps, 1), abs=eps**4
    )


# ---------------------------------------------------------------------------
# model fitting


def test_fit_exact_line_has_tiny_rss():
    x = np.arange(8)
    _, rss = fit_model(x, 3.0 * x + 1.0, ModelSpec("linear"))
    assert rss < 1e-20


def test_quad_beats_linear_on_overrotation_data():
    n = np.arange(17)
    alpha = overrotation_alpha_exact(np.pi / 64, n)
    _, r_lin = fit_model(n, alpha, ModelSpec("linear"))
    _, r_quad = fit_model(n, alpha, ModelSpec("quad"))
    assert r_quad < r_lin


def test_combined_rss_never_exceeds_quad(rng):
    n = np.arange(10)
    for _ in range(20):
        y = rng.normal(size=10)
        _, r_quad = fit_model(n, y, ModelSpec("quad"))
        _, r_comb = fit_model(n, y, ModelSpec("combined"))
        assert r_comb <= r_quad + 1e-15


def test_fit_rejects_rank_deficient_design():
    with pytest.raises(FitError, match="rank"):
        fit_model(np.zeros(6), np.arange(6.0), ModelSpec("linear"))


def test_fit_rejects_too_few_points():
    with pytest.raises(FitError):
        fit_model(np.arange(3), np.arange(3.0), ModelSpec("linear"))


# ---------------------------------------------------------------------------
# classification


def test_classify_linear_data():
    n = np.arange(9)
    rep = classify(zip(n, 1.0 - 2e-4 * n + _jitter(n, 1e-7)))
    assert rep.verdict == "non-unitary"
    assert rep.rel_prob["linear"] == 1.0


def test_classify_quadratic_data():
    n = np.arange(9)
    rep = classify(zip(n, 1.0 - 4e-4 * n**2 + _jitter(n, 1e-7)))
    assert rep.verdict == "unitary"
    assert rep.rel_prob["quad"] == 1.0


def test_classify_small_angle_cosine_decay():
    """The exact repeated-rotation alpha at small n*eps reads as unitary."""
    n = np.arange(5)
    rep = classify(zip(n, overrotation_alpha_exact(np.pi / 64, n) + _jitter(n, 1e-8)))
    assert rep.verdict == "unitary"


def test_classify_mixed_data():
    n = np.arange(17)
    y = 1.0 - 1e-3 * n - 5e-4 * n**2 + _jitter(n, 1e-6)
    rep = classify(zip(n, y))
    assert rep.verdict == "mixed"


def _jitter(n, scale):
    # deterministic noise so the tests are reproducible and RSS stays nonzero
    return scale * np.sin(17.0 * np.asarray(n, dtype=float) + 0.3)


def test_classify_needs_five_distinct_counts():
    with pytest.raises(FitError, match="5 distinct"):
        classify([(0, 1.0), (1, 0.9), (2, 0.8), (3, 0.7)])


def test_classify_penalty_beats_nested_rss_gain():
    """combined always has the smaller RSS yet can lose on AIC."""
    n = np.arange(17)
    rep = classify(zip(n, 1.0 - 2e-4 * n**2 + _jitter(n, 1e-8)))
    assert rep.rss["combined"] <= rep.rss["quad"]
    assert rep.aic["combined"] > rep.aic["quad"]
    assert rep.verdict == "unitary"


def _tied_dataset():
    """Quadratic data engineered so C(combined) beats C(quad) by only 0.005.

    The linear-column component beta is chosen from the AIC identity so the
    penalty difference (k = 3 vs k = 2 at m = 17) is cancelled to within the
    tie-break window.
    """
    rng = np.random.default_rng(42)
    x = np.arange(17.0)
    quad = 1.0 - 3e-4 * x**2
    dc = ModelSpec("combined").design(x)
    e = rng.normal(size=17)
    e -= dc @ np.linalg.lstsq(dc, e, rcond=None)[0]
    rc = 1e-8
    e *= np.sqrt(rc / (e @ e))
    u = x.copy()
    dq = ModelSpec("quad").design(x)
    u -= dq @ np.linalg.lstsq(dq, u, rcond=None)[0]
    u /= np.linalg.norm(u)
    pen_diff = (2 * 3 + 2 * 3 * 4 / 13) - (2 * 2 + 2 * 2 * 3 / 14)
    beta = np.sqrt((np.exp((pen_diff + 0.005) / 17.0) - 1.0) * rc)
    return list(zip(x.astype(int), quad + e + beta * u))


def test_tie_breaks_toward_fewer_parameters():
    rep = classify(_tied_dataset())
    gap = rep.aic["quad"] - rep.aic["combined"]
    assert 0 < gap < TIE_BREAK_DELTA  # combined wins raw AIC, but within the window
    assert rep.verdict == "unitary"
    assert rep.tie_broken


def test_require_conclusive_raises_on_tie():
    rep = classify(_tied_dataset())
    with pytest.raises(InconclusiveClassification):
        require_conclusive(rep)


def test_require_conclusive_passes_clear_winner():
    n = np.arange(9)
    rep = classify(zip(n, 1.0 - 2e-4 * n + _jitter(n, 1e-7)))
    assert require_conclusive(rep) is rep


def test_classify_scale_equivariance():
    """Scaling the data scales every RSS by c^2 and leaves the verdict alone."""
    n = np.arange(11)
    y = 1.0 - 3e-4 * n**2 + _jitter(n, 1e-6)
    base = classify(zip(n, y))
    scaled = classify(zip(n, 4.0 * y))
    for kind in ("linear", "quad", "combined"):
        assert scaled.rss[kind] == pytest.approx(16.0 * base.rss[kind], rel=1e-9)
        assert scaled.aic[kind] == pytest.approx(
            base.aic[kind] + 11 * math.log(16.0), abs=1e-9
        )
        assert scaled.rel_prob[kind] == pytest.approx(base.rel_prob[kind], rel=1e-9)
    assert scaled.verdict == base.verdict


def test_report_serializes():
    n = np.arange(9)
    rep = classify(zip(n, 1.0 - 2e-4 * n + _jitter(n, 1e-7)))
    d = rep.to_dict()
    assert d["verdict"] == "non-unitary"
    assert set(d["aic"]) == {"linear", "quad", "combined"}
    assert d["n_points"] == 9
