"""Randomized benchmarking and iterated-interleaving experiments.

The decay model is P(survival at length i) = A * alpha**i + B; alpha is the
depolarizing parameter of the average (twirled) gate error and A, B absorb
state-preparation and measurement imperfections. The interleaved variant
inserts n copies of a target gate after each random Clifford and tracks the
fitted alpha_n as a function of n.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import cliffords
from .channels import Channel, compose_all
from .cliffords import AVG_PULSES_PER_CLIFFORD, CliffordElement, GeneratorPulse
from .errors import ConfigError, FitError

DEFAULT_MAX_LENGTH = 365
DEFAULT_NUM_LENGTHS = 12


def thread_count() -> int:
    """Worker count from the IRB_LAB_THREADS environment variable (default 1).

    Results never depend on the worker count: every (length, seed, repeat)
    cell derives its own rng stream, so scheduling is irrelevant.
    """
    raw = os.environ.get("IRB_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"IRB_LAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"IRB_LAB_THREADS must be >= 1, got {n}")
    return n


def default_lengths(
    max_length: int = DEFAULT_MAX_LENGTH, num: int = DEFAULT_NUM_LENGTHS
) -> tuple[int, ...]:
    """Roughly log-spaced sequence lengths from 2 to max_length."""
    grid = np.unique(
        np.round(np.logspace(np.log10(2.0), np.log10(float(max_length)), num)).astype(int)
    )
    return tuple(int(v) for v in grid)


@dataclass(frozen=True)
class RbConfig:
    lengths: tuple[int, ...] = field(default_factory=default_lengths)
    num_seeds: int = 35
    shots: int | None = None  # None = exact expectation values
    seed: int = 0

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        if not lengths or any(v < 1 for v in lengths):
            raise ConfigError("lengths must be positive integers")
        if len(set(lengths)) != len(lengths):
            raise ConfigError("lengths must be distinct")
        object.__setattr__(self, "lengths", lengths)
        if self.num_seeds < 1:
            raise ConfigError("num_seeds must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be a positive integer or None")


@dataclass(frozen=True)
class IrbConfig:
    rb: RbConfig = field(default_factory=RbConfig)
    target: tuple[str, ...] = ("X90",)
    repeats: tuple[int, ...] = tuple(range(17))

    def __post_init__(self):
        target = tuple(self.target)
        if not target:
            raise ConfigError("target must contain at least one pulse kind")
        for k in target:
            if k not in cliffords.PULSE_KINDS:
                raise ConfigError(f"unknown pulse kind {k!r} in target")
        object.__setattr__(self, "target", target)
        repeats = tuple(int(n) for n in self.repeats)
        if not repeats or any(n < 0 for n in repeats):
            raise ConfigError("repeats must be non-negative integers")
        if len(set(repeats)) != len(repeats):
            raise ConfigError("repeats must be distinct")
        object.__setattr__(self, "repeats", repeats)


@dataclass(frozen=True)
class DecaySeries:
    """Survival probabilities on a length grid: one row per random seed."""

    lengths: np.ndarray  # (m,)
    survivals: np.ndarray  # (num_seeds, m)

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=int)
        surv = np.asarray(self.survivals, dtype=float)
        if surv.ndim != 2 or surv.shape[1] != lengths.size:
            raise ConfigError("survivals must be (num_seeds, num_lengths)")
        lengths.setflags(write=False)
        surv.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "survivals", surv)

    @property
    def mean(self) -> np.ndarray:
        return self.survivals.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        if self.survivals.shape[0] < 2:
            return np.zeros(self.lengths.size)
        return self.survivals.std(axis=0, ddof=1) / np.sqrt(self.survivals.shape[0])


@dataclass(frozen=True)
class DecayFit:
    """Parameters of A * alpha**i + B fitted to a DecaySeries."""

    amplitude: float
    alpha: float
    offset: float
    alpha_stderr: float
    rss: float
    n_points: int
    degenerate: bool = False  # constant data; alpha pinned, CI unbounded

    @property
    def alpha_ci95(self) -> tuple[float, float]:
        half = 1.96 * self.alpha_stderr
        return (self.alpha - half, self.alpha + half)

    def predict(self, lengths) -> np.ndarray:
        x = np.asarray(lengths, dtype=float)
        return self.amplitude * self.alpha**x + self.offset

    @property
    def r_clifford(self) -> float:
        """Average error per Clifford, r = (1 - alpha)/2."""
        return (1.0 - self.alpha) / 2.0

    @property
    def r_generator(self) -> float:
        """Average error per generator pulse via the decomposition constant."""
        return self.r_clifford / AVG_PULSES_PER_CLIFFORD


def _decay_model(x, a, alpha, b):
    return a * np.power(alpha, x) + b


def fit_decay(lengths, mean_survival) -> DecayFit:
    """Nonlinear least squares for the RB decay.

    Damped least squares (trust-region) on (A, alpha, B) with A = B = 0.5
    starting values and alpha seeded by a two-point log estimate; alpha is
    bounded to (0, 1.05]. Constant data cannot identify alpha; near-unit
    survival is reported as alpha = 1 with the degenerate flag set, anything
    else raises FitError.
    """
    x = np.asarray(lengths, dtype=float)
    y = np.asarray(mean_survival, dtype=float)
    if x.size != y.size or x.size < 3:
        raise FitError("decay fit needs at least 3 (length, survival) points")

    if np.ptp(y) < 1e-12:
        if y[0] > 0.9:
            return DecayFit(
                amplitude=0.5,
                alpha=1.0,
                offset=float(y[0]) - 0.5,
                alpha_stderr=np.inf,
                rss=0.0,
                n_points=int(x.size),
                degenerate=True,
            )
        raise FitError(
            "survival is constant; decay rate is unidentifiable", raw_data=(x, y)
        )

    a0, b0 = 0.5, 0.5
    lo = np.argmin(x)
    hi = np.argmax(x)
    num = y[hi] - b0
    den = y[lo] - b0
    if num > 1e-6 and den > 1e-6:
        alpha0 = float((num / den) ** (1.0 / (x[hi] - x[lo])))
    else:
        alpha0 = 0.99
    alpha0 = float(np.clip(alpha0, 1e-3, 1.04))

    try:
        popt, pcov = curve_fit(
            _decay_model,
            x,
            y,
            p0=(a0, alpha0, b0),
            bounds=((0.0, 1e-9, -0.2), (1.2, 1.05, 1.2)),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"decay fit did not converge: {exc}", raw_data=(x, y)) from exc

    resid = y - _decay_model(x, *popt)
    var = pcov[1, 1]
    stderr = float(np.sqrt(var)) if np.isfinite(var) and var >= 0 else np.inf
    return DecayFit(
        amplitude=float(popt[0]),
        alpha=float(popt[1]),
        offset=float(popt[2]),
        alpha_stderr=stderr,
        rss=float(np.dot(resid, resid)),
        n_points=int(x.size),
    )


# ---------------------------------------------------------------------------
# sequence construction


def generate_rb_sequence(length: int, rng) -> list[CliffordElement]:
    """length uniformly random Cliffords plus the recovery element."""
    if length < 1:
        raise ConfigError("sequence length must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    body = [cliffords.element(int(i)) for i in rng.integers(0, cliffords.GROUP_ORDER, length)]
    return body + [cliffords.recovery_gate(body)]


def _target_elements(target) -> tuple:
    """Normalize an interleave target to a tuple of gate objects."""
    if isinstance(target, (str, CliffordElement, GeneratorPulse)):
        target = (target,)
    out = []
    for t in target:
        out.append(GeneratorPulse(t) if isinstance(t, str) else t)
    return tuple(out)


def _ideal_clifford(gates) -> CliffordElement:
    acc = cliffords.element(0)
    for g in gates:
        if isinstance(g, CliffordElement):
            acc = cliffords.compose(acc, g)
        else:
            acc = cliffords.compose(acc, cliffords.from_unitary(g.unitary()))
    return acc


def interleave(sequence, target, n: int) -> list:
    """Insert n copies of target after each Clifford; recovery recomputed.

    sequence is a Clifford list ending in its recovery element (as produced
    by generate_rb_sequence). n = 0 returns the sequence unchanged. The
    returned list mixes CliffordElements and GeneratorPulses; its ideal
    composition is the identity.
    """
    if n < 0:
        raise ConfigError("interleave count must be >= 0")
    if len(sequence) < 2:
        raise ConfigError("sequence must include its recovery element")
    if n == 0:
        return list(sequence)
    targets = _target_elements(target)
    body = list(sequence[:-1])
    out = []
    for c in body:
        out.append(c)
        for _ in range(n):
            out.extend(targets)
    out.append(cliffords.inverse(_ideal_clifford(out)))
    return out


def run(gate_list, backend, shots: int | None = None, rng=None) -> float:
    """Survival probability of an explicit gate list from |0>.

    Gates may be CliffordElements, GeneratorPulses, or pulse-kind strings.
    With finite shots the exact probability is replaced by a binomial
    sample drawn from rng (a seeded generator is created when omitted).
    """
    from .channels import QubitState, apply, ground_population

    chans = []
    for g in gate_list:
        if isinstance(g, CliffordElement):
            chans.append(backend.clifford_channel(g))
        else:
            chans.append(backend.pulse_channel(g))
    if chans:
        rho = apply(compose_all(chans), QubitState.ground())
        p = ground_population(rho)
    else:
        p = 1.0
    p = backend.apply_readout(p)
    if shots is None:
        return p
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(0 if rng is None else rng)
    return int(rng.binomial(shots, min(max(p, 0.0), 1.0))) / shots


# ---------------------------------------------------------------------------
# experiment engines


def _cell_rng(master_seed: int, length: int, seed_idx: int, repeat: int):
    return np.random.default_rng((master_seed, length, seed_idx, repeat))


def _segment_from_kinds(backend, kinds) -> tuple[Channel, int]:
    channel = compose_all([backend.pulse_channel(k) for k in kinds])
    ideal = cliffords.from_pulses([GeneratorPulse(k) for k in kinds])
    return channel, ideal.index


def _series_for_repeat(backend, cfg: RbConfig, n: int, segment) -> DecaySeries:
    """Survival matrix for one interleave count (n = 0: plain RB).

    segment is None or (Channel, ideal clifford index) for the interleaved
    target. Sequences are composed as 4-vector pushforwards, vectorized over
    seeds; each (length, seed, n) cell has its own rng stream so results do
    not depend on execution order.
    """
    stack = backend.clifford_superops
    compose_table = cliffords.composition_table()
    inverse_table = cliffords.inversion_table()

    if segment is not None and n > 0:
        seg_channel, seg_idx = segment
        seg_pow = np.linalg.matrix_power(seg_channel.superop, n)
        seg_pow_idx = 0
        for _ in range(n):
            seg_pow_idx = int(compose_table[seg_pow_idx, seg_idx])
        step_mats = np.matmul(seg_pow, stack)  # Clifford then n segment copies
    else:
        seg_pow_idx = 0
        step_mats = stack

    rho0 = np.zeros(4)
    rho0[0] = 1.0
    scale, offset = backend.readout.scale, backend.readout.offset

    survivals = np.empty((cfg.num_seeds, len(cfg.lengths)))
    for li, length in enumerate(cfg.lengths):
        rngs = [_cell_rng(cfg.seed, length, s, n) for s in range(cfg.num_seeds)]
        seqs = np.stack(
            [rng.integers(0, cliffords.GROUP_ORDER, length) for rng in rngs]
        )  # (seeds, length)

        net = np.zeros(cfg.num_seeds, dtype=int)
        for j in range(length):
            net = compose_table[net, seqs[:, j]]
            if seg_pow_idx:
                net = compose_table[net, seg_pow_idx]
        rec = inverse_table[net]

        v = np.tile(rho0.astype(complex), (cfg.num_seeds, 1))
        for j in range(length):
            v = np.matmul(step_mats[seqs[:, j]], v[:, :, None])[:, :, 0]
        v = np.matmul(stack[rec], v[:, :, None])[:, :, 0]
        p = np.clip(v[:, 0].real, 0.0, 1.0) * scale + offset

        if cfg.shots is None:
            survivals[:, li] = p
        else:
            survivals[:, li] = [
                rngs[s].binomial(cfg.shots, p[s]) / cfg.shots
                for s in range(cfg.num_seeds)
            ]
    return DecaySeries(np.asarray(cfg.lengths), survivals)


@dataclass(frozen=True)
class RbResult:
    series: DecaySeries
    fit: DecayFit

    def __iter__(self):  # allows (series, fit) unpacking
        return iter((self.series, self.fit))

    @property
    def alpha(self) -> float:
        return self.fit.alpha

    @property
    def r_clifford(self) -> float:
        return self.fit.r_clifford

    @property
    def r_generator(self) -> float:
        return self.fit.r_generator


def rb_experiment(cfg: RbConfig, backend) -> RbResult:
    """Standard randomized benchmarking: random Clifford sequences plus
    recovery, averaged over seeds, fitted to A * alpha**i + B."""
    series = _series_for_repeat(backend, cfg, 0, None)
    fit = fit_decay(series.lengths, series.mean)
    return RbResult(series, fit)


@dataclass(frozen=True)
class IrbResult:
    """Per-repeat decay fits of an interleaved experiment.

    Iterating yields (n, DecayFit) pairs. alphas are the raw fitted decay
    parameters; alpha_ratios divide by the n = 0 reference, isolating the
    interleaved segment. The classifier consumes raw alphas by default.
    """

    repeats: tuple[int, ...]
    series: tuple[DecaySeries, ...]
    fits: tuple[DecayFit, ...]
    target: tuple[str, ...]

    def __iter__(self):
        return iter(zip(self.repeats, self.fits))

    @property
    def alphas(self) -> np.ndarray:
        return np.array([f.alpha for f in self.fits])

    @property
    def alpha_ratios(self) -> np.ndarray:
        if 0 not in self.repeats:
            raise ConfigError("alpha_ratios needs the n = 0 reference in repeats")
        ref = self.fits[self.repeats.index(0)].alpha
        return self.alphas / ref

    def pairs(self, ratio: bool = False) -> list[tuple[int, float]]:
        values = self.alpha_ratios if ratio else self.alphas
        return list(zip(self.repeats, (float(a) for a in values)))

    def segment_error(self, n: int) -> float:
        """Average error of n segment copies from the interleaved ratio."""
        idx = self.repeats.index(n)
        return (1.0 - float(self.alpha_ratios[idx])) / 2.0


def irb_experiment(
    cfg: IrbConfig, backend, *, segment_channel: Channel | None = None
) -> IrbResult:
    """Interleaved RB over the configured repeat counts.

    The interleaved segment defaults to the backend's own channels for
    cfg.target; segment_channel overrides it (the ideal action is still
    derived from cfg.target, so the override must differ from it only by
    errors). Repeat counts are processed independently; IRB_LAB_THREADS > 1
    distributes them over a thread pool without affecting results.
    """
    ideal = cliffords.from_pulses([GeneratorPulse(k) for k in cfg.target])
    if segment_channel is None:
        segment = _segment_from_kinds(backend, cfg.target)
    else:
        segment = (segment_channel, ideal.index)

    backend.clifford_superops  # build the cache before threading

    def one(n: int) -> DecaySeries:
        return _series_for_repeat(backend, cfg.rb, n, segment)

    workers = min(thread_count(), len(cfg.repeats))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            series = tuple(pool.map(one, cfg.repeats))
    else:
        series = tuple(one(n) for n in cfg.repeats)

    fits = tuple(fit_decay(s.lengths, s.mean) for s in series)
    return IrbResult(tuple(cfg.repeats), series, fits, cfg.target)
