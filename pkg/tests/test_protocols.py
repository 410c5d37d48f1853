"""RB / interleaved-RB engines: sequences, decay fits, and known-noise oracles."""

import numpy as np
import pytest

from irblab import cliffords
from irblab.backends import ExactBackend, ReadoutModel
from irblab.calibration import coherence_limit
from irblab.cliffords import CliffordElement, GeneratorPulse
from irblab.errors import ConfigError, FitError
from irblab.modelsel import classify
from irblab.protocols import (
    DecayFit,
    DecaySeries,
    IrbConfig,
    RbConfig,
    default_lengths,
    fit_decay,
    generate_rb_sequence,
    interleave,
    irb_experiment,
    rb_experiment,
    run,
    thread_count,
)
from irblab.transmon import NoiseConfig, DeviceParams


def _matrix_of(seq) -> np.ndarray:
    """Left-to-right product of the unitaries of a mixed gate list."""
    u = np.eye(2, dtype=complex)
    for g in seq:
        w = g.unitary() if isinstance(g, GeneratorPulse) else g.unitary
        u = w.u @ u
    return u


def _is_identity_up_to_phase(u: np.ndarray, tol=1e-9) -> bool:
    phase = u[0, 0] / abs(u[0, 0])
    return np.max(np.abs(u / phase - np.eye(2))) < tol


# --- configs and containers ---------------------------------------------------


def test_default_lengths_shape():
    lengths = default_lengths()
    assert lengths[0] == 2
    assert lengths[-1] == 365
    assert list(lengths) == sorted(set(lengths))
    assert default_lengths(50, 4) == (2, 6, 17, 50)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"lengths": ()},
        {"lengths": (0, 4)},
        {"lengths": (4, 4)},
        {"num_seeds": 0},
        {"shots": 0},
    ],
)
def test_rb_config_validation(kwargs):
    with pytest.raises(ConfigError):
        RbConfig(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"target": ()},
        {"target": ("X45",)},
        {"repeats": ()},
        {"repeats": (0, -1)},
        {"repeats": (1, 1)},
    ],
)
def test_irb_config_validation(kwargs):
    with pytest.raises(ConfigError):
        IrbConfig(**kwargs)


def test_decay_series_stats():
    s = DecaySeries([2, 4], [[1.0, 0.8], [0.9, 0.6]])
    assert np.allclose(s.mean, [0.95, 0.7])
    expected = np.std([[1.0, 0.8], [0.9, 0.6]], axis=0, ddof=1) / np.sqrt(2)
    assert np.allclose(s.stderr, expected)
    single = DecaySeries([2, 4], [[1.0, 0.8]])
    assert np.all(single.stderr == 0.0)
    with pytest.raises(ConfigError):
        DecaySeries([2, 4], [1.0, 0.8])  # not 2-d


def test_decay_fit_derived_quantities():
    fit = DecayFit(
        amplitude=0.5, alpha=0.98, offset=0.5, alpha_stderr=0.01, rss=0.0, n_points=5
    )
    assert fit.r_clifford == pytest.approx(0.01)
    assert fit.r_generator == pytest.approx(0.01 / 1.875)
    lo, hi = fit.alpha_ci95
    assert (lo, hi) == pytest.approx((0.98 - 0.0196, 0.98 + 0.0196))
    assert np.allclose(fit.predict([0, 1]), [1.0, 0.5 * 0.98 + 0.5])


# --- decay fitting -------------------------------------------------------------


def test_fit_decay_recovers_exact_parameters():
    lengths = np.array([2, 4, 8, 16, 32, 64, 128])
    y = 0.45 * 0.97**lengths + 0.52
    fit = fit_decay(lengths, y)
    assert fit.alpha == pytest.approx(0.97, abs=1e-7)
    assert fit.amplitude == pytest.approx(0.45, abs=1e-6)
    assert fit.offset == pytest.approx(0.52, abs=1e-6)
    assert fit.rss < 1e-12
    assert not fit.degenerate


def test_fit_decay_needs_three_points():
    with pytest.raises(FitError):
        fit_decay([2, 4], [0.9, 0.8])


def test_fit_decay_constant_high_survival_degenerates():
    fit = fit_decay([2, 4, 8], [0.995, 0.995, 0.995])
    assert fit.degenerate
    assert fit.alpha == 1.0
    assert fit.alpha_stderr == np.inf
    lo, hi = fit.alpha_ci95
    assert lo == -np.inf and hi == np.inf


def test_fit_decay_constant_low_survival_raises():
    with pytest.raises(FitError, match="unidentifiable"):
        fit_decay([2, 4, 8], [0.4, 0.4, 0.4])


def test_fit_decay_ci_roughly_calibrated():
    """95% intervals from the fit covariance should cover the truth in at
    least ~90% of synthetic noisy repetitions."""
    lengths = np.array(default_lengths())
    rng = np.random.default_rng(2024)
    hits = 0
    for _ in range(200):
        y = 0.5 * 0.97**lengths + 0.5 + rng.normal(0.0, 0.005, lengths.size)
        lo, hi = fit_decay(lengths, y).alpha_ci95
        hits += lo <= 0.97 <= hi
    assert hits >= 180


# --- sequence construction ------------------------------------------------------


def test_generate_rb_sequence_closes_to_identity():
    rng = np.random.default_rng(7)
    seq = generate_rb_sequence(20, rng)
    assert len(seq) == 21
    assert all(isinstance(c, CliffordElement) for c in seq)
    assert _is_identity_up_to_phase(_matrix_of(seq))


def test_generate_rb_sequence_reproducible():
    a = generate_rb_sequence(15, np.random.default_rng(42))
    b = generate_rb_sequence(15, np.random.default_rng(42))
    assert [c.index for c in a] == [c.index for c in b]
    c = generate_rb_sequence(15, 42)  # plain ints seed a fresh generator
    assert [x.index for x in a] == [x.index for x in c]


def test_generate_rb_sequence_rejects_zero_length():
    with pytest.raises(ConfigError):
        generate_rb_sequence(0, np.random.default_rng(0))


def test_interleave_zero_copies_is_noop():
    seq = generate_rb_sequence(5, np.random.default_rng(1))
    out = interleave(seq, "X90", 0)
    assert out == list(seq)
    assert out is not seq


def test_interleave_structure_and_recovery():
    seq = generate_rb_sequence(6, np.random.default_rng(3))
    out = interleave(seq, "X90", 4)
    # 6 Cliffords, 4 pulses after each, plus the recomputed recovery
    assert len(out) == 6 * 5 + 1
    assert isinstance(out[-1], CliffordElement)
    assert sum(isinstance(g, GeneratorPulse) for g in out) == 24
    assert _is_identity_up_to_phase(_matrix_of(out))


def test_interleave_multi_pulse_target():
    seq = generate_rb_sequence(4, np.random.default_rng(9))
    out = interleave(seq, ("X90", "Y90"), 2)
    assert len(out) == 4 * (1 + 2 * 2) + 1
    assert _is_identity_up_to_phase(_matrix_of(out))


def test_interleave_validation():
    seq = generate_rb_sequence(3, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        interleave(seq, "X90", -1)
    with pytest.raises(ConfigError):
        interleave(seq[:1], "X90", 1)


# --- running explicit sequences --------------------------------------------------


def test_run_empty_sequence_is_readout_of_one():
    assert run([], ExactBackend()) == 1.0
    bk = ExactBackend(readout=ReadoutModel(scale=0.9, offset=0.05))
    assert run([], bk) == pytest.approx(0.95)


def test_run_examples_on_ideal_backend():
    bk = ExactBackend()
    assert run(["X180", "X180"], bk) == pytest.approx(1.0, abs=1e-12)
    assert run(["X180"], bk) == pytest.approx(0.0, abs=1e-12)
    assert run(["X90"], bk) == pytest.approx(0.5, abs=1e-12)
    mixed = [cliffords.element(5), GeneratorPulse("Y90"), "X-90"]
    p = run(mixed, bk)
    assert 0.0 <= p <= 1.0


def test_run_with_shots_matches_exact_probability():
    bk = ExactBackend()
    seq = generate_rb_sequence(8, np.random.default_rng(2))
    p_exact = run(seq + ["X90"], bk)
    p_sampled = run(seq + ["X90"], bk, shots=1_000_000, rng=np.random.default_rng(11))
    assert abs(p_sampled - p_exact) < 5e-3
    # sampling is deterministic given the generator state
    again = run(seq + ["X90"], bk, shots=1_000_000, rng=np.random.default_rng(11))
    assert p_sampled == again


# --- experiment engines vs oracles ------------------------------------------------


def test_rb_alpha_matches_depolarizing_parameter():
    """Gate-independent depolarizing noise makes the decay base exactly p."""
    bk = ExactBackend(depolarizing_p=0.98)
    cfg = RbConfig(lengths=(2, 4, 8, 16, 32, 64, 110), num_seeds=20, seed=5)
    result = rb_experiment(cfg, bk)
    assert result.alpha == pytest.approx(0.98, abs=1e-3)
    assert result.r_clifford == pytest.approx(0.01, abs=5e-4)


def test_rb_ideal_backend_degenerates():
    result = rb_experiment(RbConfig(lengths=(2, 4, 8), num_seeds=3), ExactBackend())
    assert result.fit.degenerate
    assert result.alpha == 1.0


def test_rb_decoherence_near_coherence_limit(device):
    """Pure T1/T2 noise: the per-generator error from RB should sit near the
    analytic decoherence error of one gate (twirling makes it approximate)."""
    bk = ExactBackend(NoiseConfig(decoherence=True), device)
    result = rb_experiment(RbConfig(num_seeds=30, seed=3), bk)
    oracle = coherence_limit(16.7e-9, device)
    assert result.r_generator == pytest.approx(oracle, rel=0.25)


def test_rb_reproducible_and_seed_sensitive():
    bk = ExactBackend(depolarizing_p=0.995)
    cfg = RbConfig(lengths=(2, 8, 32, 110), num_seeds=4, seed=77)
    a = rb_experiment(cfg, bk)
    b = rb_experiment(cfg, bk)
    assert np.array_equal(a.series.survivals, b.series.survivals)
    assert a.alpha == b.alpha
    other = rb_experiment(RbConfig(lengths=(2, 8, 32, 110), num_seeds=4, seed=78), bk)
    assert not np.array_equal(a.series.survivals, other.series.survivals)


def test_rb_alpha_invariant_under_readout_error():
    """An affine readout map changes A and B but not the decay base."""
    cfg = RbConfig(lengths=(2, 4, 8, 16, 32, 64, 110), num_seeds=20, seed=5)
    ideal = rb_experiment(cfg, ExactBackend(depolarizing_p=0.98))
    spam = rb_experiment(
        cfg,
        ExactBackend(depolarizing_p=0.98, readout=ReadoutModel(scale=0.88, offset=0.07)),
    )
    assert spam.alpha == pytest.approx(ideal.alpha, abs=1e-6)
    assert spam.fit.amplitude == pytest.approx(0.88 * ideal.fit.amplitude, rel=1e-3)


def test_irb_zero_repeat_equals_rb():
    """n = 0 shares rng streams with plain RB, so the series are bit-identical."""
    bk = ExactBackend(depolarizing_p=0.99)
    rb_cfg = RbConfig(lengths=(2, 4, 8, 16), num_seeds=6, seed=21)
    rb = rb_experiment(rb_cfg, bk)
    irb = irb_experiment(IrbConfig(rb=rb_cfg, target=("X90",), repeats=(0,)), bk)
    assert np.array_equal(irb.series[0].survivals, rb.series.survivals)
    assert irb.fits[0].alpha == rb.fit.alpha


def test_irb_identity_target_decay_is_log_linear(device):
    """Interleaving a decohering gate n times multiplies the decay base by
    alpha_seg^n, so log(alpha_n) is linear in n with slope log(alpha_seg)."""
    bk = ExactBackend(NoiseConfig(decoherence=True), device)
    cfg = IrbConfig(
        rb=RbConfig(num_seeds=60, seed=9), target=("X90",), repeats=tuple(range(7))
    )
    result = irb_experiment(cfg, bk)
    n = np.asarray(result.repeats, dtype=float)
    slope, _ = np.polyfit(n, np.log(result.alphas), 1)
    alpha_seg = 1.0 - 2.0 * coherence_limit(16.7e-9, device)
    assert slope == pytest.approx(np.log(alpha_seg), rel=0.15)
    # and the classifier reads the linear log-decay as non-unitary
    assert classify(result.pairs()).verdict == "non-unitary"


def test_irb_alpha_ratios_and_segment_error():
    bk = ExactBackend(depolarizing_p=0.998)
    cfg = IrbConfig(
        rb=RbConfig(lengths=(2, 4, 8, 16, 32), num_seeds=10, seed=4),
        target=("X90",),
        repeats=(0, 1, 2),
    )
    result = irb_experiment(cfg, bk)
    assert result.alpha_ratios[0] == pytest.approx(1.0)
    assert result.pairs()[0][0] == 0
    assert result.pairs(ratio=True)[0][1] == pytest.approx(1.0)
    # ideal target on a depolarizing backend: interleaves add no extra decay
    assert result.segment_error(2) == pytest.approx(0.0, abs=5e-3)
    no_ref = irb_experiment(
        IrbConfig(rb=cfg.rb, target=("X90",), repeats=(1, 2, 3)), bk
    )
    with pytest.raises(ConfigError):
        no_ref.alpha_ratios


def test_irb_segment_channel_override():
    """An explicit segment channel replaces the backend's own target gates."""
    from irblab.channels import rotation, unitary_channel

    bk = ExactBackend(depolarizing_p=0.999)
    # the coherent segment's twirl fluctuations shrink ~1/sqrt(seeds), so a
    # big epsilon needs a deep seed average to sit on the cosine curve
    cfg = IrbConfig(
        rb=RbConfig(lengths=(2, 4, 8, 16, 32, 64), num_seeds=150, seed=13),
        target=("X90",),
        repeats=(0, 2, 4),
    )
    eps = np.pi / 24
    seg = unitary_channel(rotation(np.pi / 2 + eps, 0.0))
    result = irb_experiment(cfg, bk, segment_channel=seg)
    ratios = result.alpha_ratios
    # over-rotating by eps per copy costs ~(2 cos(n eps) + 1)/3 per Clifford
    for n, got in zip(result.repeats, ratios):
        want = (2.0 * np.cos(n * eps) + 1.0) / 3.0
        assert got == pytest.approx(want, abs=0.02)


# --- threading ------------------------------------------------------------------


def test_thread_count_parsing(monkeypatch):
    monkeypatch.delenv("IRB_LAB_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("IRB_LAB_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("IRB_LAB_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_count()
    monkeypatch.setenv("IRB_LAB_THREADS", "0")
    with pytest.raises(ConfigError):
        thread_count()


def test_irb_results_independent_of_thread_count(monkeypatch):
    bk = ExactBackend(depolarizing_p=0.99)
    cfg = IrbConfig(
        rb=RbConfig(lengths=(2, 4, 8, 16), num_seeds=8, seed=6),
        target=("X90",),
        repeats=(0, 1, 2, 3),
    )
    monkeypatch.setenv("IRB_LAB_THREADS", "1")
    serial = irb_experiment(cfg, bk)
    monkeypatch.setenv("IRB_LAB_THREADS", "3")
    threaded = irb_experiment(cfg, bk)
    for a, b in zip(serial.series, threaded.series):
        assert np.array_equal(a.survivals, b.survivals)
    assert np.array_equal(serial.alphas, threaded.alphas)
