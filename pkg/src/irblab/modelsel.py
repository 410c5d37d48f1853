"""Model selection for decay-vs-repetition data: is the error unitary?

Fits the per-segment benchmarking parameter alpha against the interleave
count with linear (a*n + b), purely quadratic (a*n^2 + b) and combined
(a*n^2 + b*n + c) models, scores them with the small-sample-corrected
Akaike information criterion, and reports relative model probabilities.
A coherent overrotation loses fidelity quadratically in the repetition
count while decoherence loses it linearly, so the winning model classifies
the error type.

Note on symbols: ``num_points`` is the number of data points entering a
fit; ``n_interleave`` (the x variable) is the repetition count. They are
distinct despite both being called "n" informally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, InconclusiveClassification

MODEL_KINDS = ("linear", "quad", "combined")

#: AIC gaps below this are treated as ties and broken toward fewer parameters.
TIE_BREAK_DELTA = 0.01


@dataclass(frozen=True)
class ModelSpec:
    """One candidate model; k is its parameter count."""

    kind: str

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise FitError(f"unknown model kind {self.kind!r}")

    @property
    def k(self) -> int:
        return {"linear": 2, "quad": 2, "combined": 3}[self.kind]

    def design(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.column_stack([x, np.ones_like(x)])
        if self.kind == "quad":
            return np.column_stack([x * x, np.ones_like(x)])
        return np.column_stack([x * x, x, np.ones_like(x)])

    def predict(self, x: np.ndarray, params: np.ndarray) -> np.ndarray:
        return self.design(x) @ np.asarray(params, dtype=float)


@dataclass
class ModelReport:
    """Per-model fit/AIC summary plus the unitary-vs-non-unitary verdict."""

    params: dict[str, list[float]]
    rss: dict[str, float]
    aic: dict[str, float]
    rel_prob: dict[str, float]
    verdict: str
    n_points: int
    tie_broken: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "rss": self.rss,
            "aic": self.aic,
            "rel_prob": self.rel_prob,
            "verdict": self.verdict,
            "n_points": self.n_points,
            "tie_broken": self.tie_broken,
            "notes": self.notes,
        }


def overrotation_alpha_exact(epsilon: float, n):
    """Exact benchmarking parameter of an n-fold repeated overrotation.

    A rotation by epsilon repeated n times is a rotation by n*epsilon, whose
    average fidelity against the identity gives alpha = (2 cos(n eps) + 1)/3.
    Accepts scalar or array n.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise FitError("repetition count must be non-negative")
    out = (2.0 * np.cos(n * epsilon) + 1.0) / 3.0
    return float(out) if out.ndim == 0 else out


def overrotation_alpha_series(epsilon: float, n):
    """Second-order small-angle form 1 - n(2n-1) eps^2 / 3.

    Kept alongside the exact expression for side-by-side reporting; the two
    agree at n = 1 to O(eps^4) but differ in their n-dependence (the exact
    form goes as n^2 eps^2 / 3 at leading order). Oracles and the classifier
    always use :func:`overrotation_alpha_exact`. Accepts scalar or array n.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise FitError("repetition count must be non-negative")
    out = 1.0 - n * (2.0 * n - 1.0) * epsilon**2 / 3.0
    return float(out) if out.ndim == 0 else out


def fit_model(n_values, alpha_values, spec: ModelSpec) -> tuple[np.ndarray, float]:
    """Ordinary least squares for one model; returns (params, residual sum of squares)."""
    x = np.asarray(n_values, dtype=float)
    y = np.asarray(alpha_values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("n_values and alpha_values must be 1-d and equal length")
    if len(x) < spec.k + 2:
        raise FitError(f"{spec.kind} fit needs at least {spec.k + 2} points, got {len(x)}")
    a = spec.design(x)
    if np.linalg.matrix_rank(a) < spec.k:
        raise FitError(f"design matrix for {spec.kind} model is rank-deficient")
    params, _, _, _ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ params
    return params, float(resid @ resid)


def aic(rss: float, num_points: int, k: int) -> float:
    """Corrected Akaike information criterion for a least-squares fit.

    C = m ln(R/m) + 2k + 2k(k+1)/(m - k - 1) with m = num_points and R the
    residual sum of squares. The last term is the small-sample correction;
    it is always included here since every grid this package produces has
    m < 40k.
    """
    if num_points <= k + 1:
        raise FitError(
            f"AIC correction needs num_points > k + 1 (got m={num_points}, k={k})"
        )
    if rss <= 0.0:
        raise FitError(
            "AIC is undefined for a zero residual sum of squares; the fit is exact. "
            "Add measurement noise (finite shots) or report the exact fit directly."
        )
    m = float(num_points)
    return m * math.log(rss / m) + 2.0 * k + 2.0 * k * (k + 1.0) / (m - k - 1.0)


def relative_probs(aic_values) -> list[float]:
    """Relative model probabilities P_i = exp((C_min - C_i)/2); best model gets 1."""
    c = np.asarray(aic_values, dtype=float)
    if c.size < 2:
        raise FitError("relative probabilities need at least two models")
    return [float(p) for p in np.exp((c.min() - c) / 2.0)]


_VERDICT = {"linear": "non-unitary", "quad": "unitary", "combined": "mixed"}


def classify(pairs) -> ModelReport:
    """Fit all three models to (n, alpha) pairs and pick a verdict by AIC.

    linear wins -> non-unitary; quad wins -> unitary; combined wins -> mixed.
    AIC gaps below TIE_BREAK_DELTA are broken toward fewer parameters.
    """
    pairs = sorted((int(n), float(a)) for n, a in pairs)
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    if len(set(x)) < 5:
        raise FitError("classification needs at least 5 distinct repetition counts")

    params: dict[str, list[float]] = {}
    rss: dict[str, float] = {}
    c: dict[str, float] = {}
    for kind in MODEL_KINDS:
        spec = ModelSpec(kind)
        p, r = fit_model(x, y, spec)
        params[kind] = [float(v) for v in p]
        rss[kind] = r
        c[kind] = aic(r, len(x), spec.k)

    order = sorted(MODEL_KINDS, key=lambda k: (c[k], ModelSpec(k).k))
    best = order[0]
    tie_broken = False
    # prefer the smaller model when the AIC gap is negligible
    for kind in MODEL_KINDS:
        if kind == best:
            continue
        if abs(c[kind] - c[best]) < TIE_BREAK_DELTA and ModelSpec(kind).k < ModelSpec(best).k:
            best = kind
            tie_broken = True
    probs = relative_probs([c[k] for k in MODEL_KINDS])
    return ModelReport(
        params=params,
        rss=rss,
        aic={k: c[k] for k in MODEL_KINDS},
        rel_prob=dict(zip(MODEL_KINDS, probs)),
        verdict=_VERDICT[best],
        n_points=len(x),
        tie_broken=tie_broken,
    )


def require_conclusive(report: ModelReport, min_gap: float = TIE_BREAK_DELTA) -> ModelReport:
    """Raise InconclusiveClassification when the top two models are tied."""
    ranked = sorted(report.aic.values())
    if len(ranked) >= 2 and (ranked[1] - ranked[0]) < min_gap:
        raise InconclusiveClassification(
            f"top models separated by AIC gap {ranked[1] - ranked[0]:.3g} < {min_gap}"
        )
    return report
