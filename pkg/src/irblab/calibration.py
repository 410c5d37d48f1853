"""Error-amplification calibration: sequences, fits, and the closed-loop driver.

Amplitude errors are amplified by repeating the miscalibrated pulse an even
number of times after a single X90, so the ground-state population deviates
from 1/2 by an amount that grows with the repetition count.  The same testbed
covers the DRAG-weight sweep and the X/Y axis-orthogonality measurement.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .channels import avg_gate_fidelity
from .cliffords import PULSE_ANGLES
from .errors import CalibrationError, ConfigError, FitError
from .pulses import GateSpec, area_condition_amplitude
from .transmon import DeviceParams, NoiseConfig

AMP_CAL_KINDS = ("X180", "X90")
AXIS_KIND = "XY-axis"
DEFAULT_N_VALUES = tuple(range(13))
CONVERGENCE_EPS = 5e-4  # rad; implied gate error eps^2/6 ~ 4e-8
AXIS_RESOLUTION_FLOOR = 1e-5  # the axis fit cannot resolve r below this
DEFAULT_LAMBDA_GRID = tuple(np.linspace(0.0, 2.0, 21))


@dataclass(frozen=True)
class AmplificationData:
    """Ground-state populations versus repetition count for one sequence family."""

    n_values: tuple
    p0: np.ndarray
    pulse_kind: str

    def __post_init__(self):
        p = np.asarray(self.p0, dtype=float)
        if len(self.n_values) != p.size:
            raise ConfigError("n_values and p0 must have matching length")
        if p.size and (p.min() < -1e-9 or p.max() > 1.0 + 1e-9):
            raise ConfigError("populations must lie in [0, 1]")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "p0", np.clip(p, 0.0, 1.0))


@dataclass(frozen=True)
class CalibrationResult:
    pulse_kind: str
    epsilon: float  # per-pulse angle error, radians
    epsilon_ci: tuple  # 95% interval
    offset_a: float
    gate_error: float  # eps^2/6 for amplitude sequences, 2 eps^2/3 for the axis one
    degenerate: bool = False

    @property
    def below_floor(self) -> bool:
        return self.gate_error < AXIS_RESOLUTION_FLOOR


@dataclass(frozen=True)
class DragSweepResult:
    lambdas: np.ndarray
    populations: np.ndarray
    best_lambda: float
    flat: bool = False
    fit_params: tuple | None = None  # (offset, amplitude, angular freq, vertex)


def amp_cal_sequence(kind: str, n: int) -> tuple:
    """X90 followed by 2n repetitions of ``kind`` (X90 or X180).

    Ideal pulses leave the Bloch vector on the equator for every n, so
    P(|0>) stays at 1/2; an angle error tips it out of plane by ~2n*eps.
    """
    if kind not in AMP_CAL_KINDS:
        raise ConfigError(f"amplification sequence supports {AMP_CAL_KINDS}, got {kind!r}")
    if n < 0:
        raise ConfigError("repetition count must be non-negative")
    return ("X90",) + (kind,) * (2 * int(n))


def axis_cal_sequence(n: int) -> tuple:
    """X90 - (X180 Y180)^n - Y-90: a Ramsey around repeated pi-pulse pairs."""
    if n < 0:
        raise ConfigError("repetition count must be non-negative")
    return ("X90",) + ("X180", "Y180") * int(n) + ("Y-90",)


def _sampled(p: float, shots, rng) -> float:
    if shots is None:
        return p
    rng = rng or np.random.default_rng()
    return rng.binomial(int(shots), min(max(p, 0.0), 1.0)) / float(shots)


def amplification_experiment(
    kind: str, n_values, backend, *, shots=None, rng=None
) -> AmplificationData:
    pops = [
        _sampled(backend.sequence_survival(amp_cal_sequence(kind, n)), shots, rng)
        for n in n_values
    ]
    return AmplificationData(tuple(n_values), np.array(pops), kind)


def _parity(n: np.ndarray) -> np.ndarray:
    return np.where(np.rint(n).astype(int) % 2 == 0, 1.0, -1.0)


def _model_half(n, a, eps):
    # X90 repetition: P = a + (1/2)(-1)^n cos(pi/2 + 2 n eps)
    return a + 0.5 * _parity(n) * np.cos(np.pi / 2 + 2.0 * n * eps)


def _model_pi(n, a, eps):
    # X180 repetition: P = a + (1/2) cos(pi/2 + 2 n eps)
    return a + 0.5 * np.cos(np.pi / 2 + 2.0 * n * eps)


def _gate_error(kind: str, eps: float) -> float:
    if kind == AXIS_KIND:
        return 2.0 * eps**2 / 3.0
    return eps**2 / 6.0


def fit_amp_error(data: AmplificationData) -> CalibrationResult:
    """Least-squares (a, eps) from an amplification experiment.

    The fit function treats the accumulated phase as 2n*eps although the
    sequence actually advances by (2n+1)*eps; the small-n bias that causes is
    absorbed by the closed-loop driver, which only needs sign and rough
    magnitude per round.
    """
    n = np.asarray(data.n_values, dtype=float)
    p = np.asarray(data.p0, dtype=float)
    if len(set(data.n_values)) < 4:
        raise FitError("need at least 4 distinct repetition counts", raw_data=data)
    if np.ptp(p) < 1e-10:
        # constant data: any eps with sin(2 n eps) == 0 fits; report the null
        return CalibrationResult(
            data.pulse_kind,
            epsilon=0.0,
            epsilon_ci=(-math.inf, math.inf),
            offset_a=float(p.mean()),
            gate_error=0.0,
            degenerate=True,
        )
    model = _model_pi if data.pulse_kind == "X180" else _model_half
    best = None
    for eps0 in np.linspace(-0.25, 0.25, 21):
        try:
            popt, pcov = curve_fit(
                model,
                n,
                p,
                p0=(float(p.mean()), eps0),
                bounds=((0.0, -np.pi / 3), (1.0, np.pi / 3)),
                xtol=1e-14,
                ftol=1e-14,
                maxfev=5000,
            )
        except (RuntimeError, ValueError):
            continue
        rss = float(np.sum((model(n, *popt) - p) ** 2))
        if best is None or rss < best[0]:
            best = (rss, popt, pcov)
    if best is None:
        raise FitError("amplification fit did not converge", raw_data=data)
    _, (a, eps), pcov = best
    sigma = math.sqrt(max(float(pcov[1, 1]), 0.0)) if np.isfinite(pcov[1, 1]) else math.inf
    ci = (eps - 1.96 * sigma, eps + 1.96 * sigma)
    return CalibrationResult(
        data.pulse_kind,
        epsilon=float(eps),
        epsilon_ci=ci,
        offset_a=float(a),
        gate_error=_gate_error(data.pulse_kind, float(eps)),
    )


def drag_cal_sweep(lambda_grid, backend, *, shots=None, rng=None) -> DragSweepResult:
    """Ground population of (X90, X-90) versus DRAG weight; cosine-fit vertex.

    On a backend without a third level the population cannot depend on the
    derivative amplitude, which is reported via the ``flat`` flag rather than
    treated as an error.
    """
    grid = np.asarray(sorted(set(float(g) for g in np.asarray(lambda_grid).ravel())))
    if grid.size < 5:
        raise ConfigError("lambda grid needs at least 5 points")
    pops = np.array(
        [
            _sampled(
                backend.with_drag_lambda(lam).sequence_survival(("X90", "X-90")),
                shots,
                rng,
            )
            for lam in grid
        ]
    )
    if np.ptp(pops) < 1e-6:
        return DragSweepResult(grid, pops, best_lambda=0.0, flat=True)

    span = float(grid[-1] - grid[0])
    off0 = 0.5 * (pops.max() + pops.min())
    amp0 = 0.5 * np.ptp(pops)
    vertex0 = float(grid[int(np.argmax(pops))])

    def cosine(lam, off, amp, w, vertex):
        return off + amp * np.cos(w * (lam - vertex))

    best = None
    for w0 in (0.5, 1.0, 2.0, 4.0):
        try:
            popt, _ = curve_fit(
                cosine,
                grid,
                pops,
                p0=(off0, amp0, w0 * np.pi / span, vertex0),
                bounds=(
                    (-0.5, 0.0, 1e-3, grid[0] - span),
                    (1.5, 1.0, 20.0 * np.pi / span, grid[-1] + span),
                ),
                maxfev=10000,
            )
        except (RuntimeError, ValueError):
            continue
        rss = float(np.sum((cosine(grid, *popt) - pops) ** 2))
        if best is None or rss < best[0]:
            best = (rss, popt)
    if best is None:
        raise FitError("DRAG sweep cosine fit did not converge")
    off, amp, w, vertex = best[1]
    if not (grid[0] < vertex < grid[-1]):
        raise CalibrationError(
            f"DRAG optimum {vertex:.3f} falls outside the swept grid "
            f"[{grid[0]:.3f}, {grid[-1]:.3f}]; widen the grid"
        )
    return DragSweepResult(
        grid, pops, best_lambda=float(vertex), fit_params=(off, amp, w, vertex)
    )


def axis_error_experiment(
    n_values, buffer_grid, backend, *, shots=None, rng=None
) -> dict:
    """Fitted X/Y axis error (and r = 2 eps^2/3) for each buffer value."""
    results = {}
    for buf in buffer_grid:
        bk = backend.with_buffer(float(buf))
        pops = [
            _sampled(bk.sequence_survival(axis_cal_sequence(n)), shots, rng)
            for n in n_values
        ]
        data = AmplificationData(tuple(n_values), np.array(pops), AXIS_KIND)
        results[float(buf)] = fit_amp_error(data)
    return results


def _programmed_amplitude(spec: GateSpec) -> float:
    return spec.amplitude if spec.amplitude is not None else area_condition_amplitude(spec)


def calibrate_amplitude(
    backend,
    kind: str,
    *,
    n_values=DEFAULT_N_VALUES,
    threshold: float = CONVERGENCE_EPS,
    max_rounds: int = 10,
    shots=None,
    rng=None,
):
    """Iterate measure-fit-update on one pulse kind until |eps| < threshold.

    Returns (calibrated backend, per-round trace). The amplitude update is
    multiplicative, amp * theta / (theta + eps): the fitted eps is the extra
    rotation per pulse, so scaling the drive back by that ratio removes it to
    first order; pulse-shape nonlinearities are what the iteration is for.
    """
    if not hasattr(backend, "with_specs"):
        raise ConfigError("amplitude calibration requires a pulse-level backend")
    theta = abs(PULSE_ANGLES[kind][0])
    trace = []
    for round_idx in range(1, max_rounds + 1):
        data = amplification_experiment(kind, n_values, backend, shots=shots, rng=rng)
        result = fit_amp_error(data)
        raw = backend.raw_spec(kind)
        amp = _programmed_amplitude(raw)
        trace.append(
            {"round": round_idx, "kind": kind, "epsilon": result.epsilon, "amplitude": amp}
        )
        if abs(result.epsilon) < threshold:
            return backend, trace
        backend = backend.with_specs(
            {kind: raw.with_updates(amplitude=amp * theta / (theta + result.epsilon))}
        )
    raise CalibrationError(
        f"amplitude calibration for {kind} did not reach |eps| < {threshold:g} "
        f"in {max_rounds} rounds",
        trace=trace,
    )


@dataclass(frozen=True)
class CalibrationOutcome:
    specs: dict
    drag_lambda: float
    rounds: list
    converged: bool
    backend: object = field(repr=False, default=None)

    @property
    def rounds_used(self) -> int:
        return len(self.rounds)


def _copy_x_to_y(backend):
    """Y amplitudes mirror the calibrated X ones; phase comes from the kind."""
    amp_half = _programmed_amplitude(backend.raw_spec("X90"))
    amp_pi = _programmed_amplitude(backend.raw_spec("X180"))
    updates = {}
    for kind, amp in (
        ("X-90", -amp_half),
        ("Y90", amp_half),
        ("Y-90", -amp_half),
        ("Y180", amp_pi),
    ):
        updates[kind] = backend.raw_spec(kind).with_updates(amplitude=amp)
    return backend.with_specs(updates)


def calibrate_all(
    backend,
    *,
    n_values=DEFAULT_N_VALUES,
    threshold: float = CONVERGENCE_EPS,
    max_rounds: int = 10,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    shots=None,
    rng=None,
) -> CalibrationOutcome:
    """Full tune-up: X180 amplitude, X90 amplitude, DRAG weight, repeated.

    Each round performs one fit-and-update per quantity, copies the X
    amplitudes onto the Y pulses, then re-checks; done once both fitted
    amplitude errors are below threshold in the same round. lambda_grid=None
    skips the DRAG sweep (useful on backends with no third level).
    """
    if not hasattr(backend, "with_specs"):
        raise ConfigError("calibration requires a pulse-level backend")
    rounds = []
    for round_idx in range(1, max_rounds + 1):
        row = {"round": round_idx}
        eps = {}
        for kind in AMP_CAL_KINDS:
            data = amplification_experiment(kind, n_values, backend, shots=shots, rng=rng)
            result = fit_amp_error(data)
            eps[kind] = result.epsilon
            raw = backend.raw_spec(kind)
            amp = _programmed_amplitude(raw)
            row[f"epsilon_{kind}"] = result.epsilon
            row[f"amplitude_{kind}"] = amp
            if abs(result.epsilon) >= threshold:
                theta = abs(PULSE_ANGLES[kind][0])
                backend = backend.with_specs(
                    {kind: raw.with_updates(amplitude=amp * theta / (theta + result.epsilon))}
                )
        backend = _copy_x_to_y(backend)
        if lambda_grid is not None:
            sweep = drag_cal_sweep(lambda_grid, backend, shots=shots, rng=rng)
            if not sweep.flat:
                backend = backend.with_drag_lambda(sweep.best_lambda)
            row["drag_lambda"] = sweep.best_lambda
        rounds.append(row)
        if all(abs(e) < threshold for e in eps.values()):
            return CalibrationOutcome(
                specs={k: backend.raw_spec(k) for k in PULSE_ANGLES},
                drag_lambda=backend.raw_spec("X90").drag_lambda,
                rounds=rounds,
                converged=True,
                backend=backend,
            )
    raise CalibrationError(
        f"calibration did not converge in {max_rounds} rounds", trace=rounds
    )


def coherence_limit(gate_time: float, device: DeviceParams) -> float:
    """Average gate error of a pure T1/T2 channel over one gate: (t/T1 + 2t/T2)/6."""
    return (gate_time / device.t1 + 2.0 * gate_time / device.t2) / 6.0


@dataclass(frozen=True)
class GateTimeSweep:
    gate_times: np.ndarray
    errors: dict  # label -> per-X90 average gate error array
    coherence_limits: np.ndarray


def gate_time_sweep(
    gate_times,
    device: DeviceParams,
    *,
    drag_lambda: float = 0.5,
    dephasing_k: float = 0.01,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> GateTimeSweep:
    """Per-X90 gate error versus gate time for three noise settings.

    Settings: DRAG off, DRAG on, and DRAG on with drive-amplitude dephasing
    gamma_phi = k |Omega(t)|. Amplitudes follow the area condition; the
    residual angle error that leaves contributes ~eps^2/6 << the decoherence
    scale, so no per-point closed-loop calibration is run here.
    """
    from .backends import PulseBackend  # local import to avoid a cycle
    from .channels import rotation

    times = np.asarray(sorted(float(t) for t in np.asarray(gate_times).ravel()))
    if times.size == 0 or times.min() <= 0:
        raise ConfigError("gate_times must be positive")
    ideal = rotation(np.pi / 2, 0.0)
    settings = {
        "drag_off": (NoiseConfig(decoherence=True), 0.0),
        "drag_on": (NoiseConfig(decoherence=True), drag_lambda),
        "drag_on_dephasing": (
            NoiseConfig(decoherence=True, drive_dephasing_k=dephasing_k),
            drag_lambda,
        ),
    }
    errors = {label: np.empty_like(times) for label in settings}
    for i, t in enumerate(times):
        for label, (noise, lam) in settings.items():
            bk = PulseBackend(
                device, noise, gate_length=t, drag_lambda=lam, rtol=rtol, atol=atol
            )
            fid = avg_gate_fidelity(bk.pulse_channel("X90"), ideal)
            errors[label][i] = 1.0 - fid.avg_fidelity
    limits = np.array([coherence_limit(t, device) for t in times])
    return GateTimeSweep(times, errors, limits)
