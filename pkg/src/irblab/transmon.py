"""Three-level transmon dynamics under a resonant drive (rotating frame, RWA).

The frame rotates at the drive frequency, taken equal to the 0-1 transition,
so only the anharmonicity enters the Hamiltonian:

    H(t) = delta |2><2| + (1/2) (Omega(t) b^dag + Omega(t)^* b),
    b = |0><1| + sqrt(2) |1><2|

with delta = 2*pi*anharmonicity (rad/s, negative for a transmon) and
Omega(t) the complex Rabi rate from the waveform. Decoherence enters as
Lindblad dissipators: amplitude damping at rate 1/T1 through b, and pure
dephasing at rate gamma_phi = 1/T2 - 1/(2 T1) through the number operator,
optionally supplemented by a drive-activated term k * |Omega(t)|.

Evolution is computed as a 9x9 superoperator (column-stacking convention)
integrated with an adaptive high-order Runge-Kutta method; the result is
compressed to a qubit channel by projecting onto the 0-1 subspace and
folding residual |2> population into |1> (a CPTP map, so channel checks
stay meaningful).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .channels import Channel
from .errors import ConfigError, SimulationError
from .pulses import Waveform

DIM = 3

#: lowering operator with harmonic-oscillator matrix elements
B_OP = np.array([[0, 1, 0], [0, 0, np.sqrt(2.0)], [0, 0, 0]], dtype=complex)
N_OP = np.diag([0.0, 1.0, 2.0]).astype(complex)
PROJ2 = np.diag([0.0, 0.0, 1.0]).astype(complex)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class DeviceParams:
    """Static transmon parameters (SI units: Hz and seconds)."""

    qubit_freq: float = 5.0154e9
    anharmonicity: float = -323e6
    t1: float = 45e-6
    t2: float = 53e-6

    def __post_init__(self):
        if self.qubit_freq <= 0:
            raise ConfigError("qubit_freq must be positive")
        if self.anharmonicity == 0:
            raise ConfigError("anharmonicity must be nonzero")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ConfigError("T1 and T2 must be positive")
        if self.t2 > 2.0 * self.t1 + 1e-30:
            raise ConfigError("T2 may not exceed 2*T1")

    @property
    def delta(self) -> float:
        """Anharmonicity in rad/s."""
        return 2.0 * np.pi * self.anharmonicity

    @property
    def gamma1(self) -> float:
        return 1.0 / self.t1

    @property
    def gamma_phi(self) -> float:
        return 1.0 / self.t2 - 0.5 / self.t1


@dataclass(frozen=True)
class NoiseConfig:
    """Switchboard for the error mechanisms injected into an experiment.

    decoherence and drive_dephasing_k act inside the pulse simulation;
    the coherent knobs (overrotation_*, axis_skew) are applied by the
    backends when they construct gates. drive_filter_tau is the time
    constant of the drive-line low-pass (0 disables it).
    """

    decoherence: bool = True
    drive_dephasing_k: float = 0.0
    overrotation_epsilon: float = 0.0
    overrotation_target: str = "X90"
    axis_skew: float = 0.0
    drive_filter_tau: float = 0.0

    def __post_init__(self):
        if self.drive_dephasing_k < 0:
            raise ConfigError("drive_dephasing_k must be non-negative")
        if self.drive_filter_tau < 0:
            raise ConfigError("drive_filter_tau must be non-negative")

    @property
    def coherent_only(self) -> "NoiseConfig":
        """Copy with all incoherent mechanisms switched off."""
        from dataclasses import replace

        return replace(self, decoherence=False, drive_dephasing_k=0.0)


NOISELESS = NoiseConfig(decoherence=False)


def _dissipator(op: np.ndarray) -> np.ndarray:
    """Column-stacking superoperator of D[op] at unit rate."""
    eye = np.eye(DIM)
    opdop = op.conj().T @ op
    return (
        np.kron(op.conj(), op)
        - 0.5 * np.kron(eye, opdop)
        - 0.5 * np.kron(opdop.T, eye)
    )


def _hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """-i [H, .] in column-stacking convention."""
    eye = np.eye(DIM)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


# drive quadrature Hamiltonians: H_drive = u(t) Hx + v(t) Hy for Omega = u + i v
HX = 0.5 * (B_OP + B_OP.conj().T)
HY = 0.5j * (B_OP.conj().T - B_OP)

_LX = _hamiltonian_superop(HX)
_LY = _hamiltonian_superop(HY)
_L_DAMP = _dissipator(B_OP)
_L_DEPH = _dissipator(np.sqrt(2.0) * N_OP)  # unit-rate gamma_phi dissipator


def _liouvillian_parts(device: DeviceParams, noise: NoiseConfig):
    """(constant part, drive-dephasing part) of the Liouvillian."""
    l0 = _hamiltonian_superop(device.delta * PROJ2)
    if noise.decoherence:
        l0 = l0 + device.gamma1 * _L_DAMP + device.gamma_phi * _L_DEPH
    l_drive_deph = noise.drive_dephasing_k * _L_DEPH
    return l0, l_drive_deph


class _EnvelopeSpline:
    """Cubic interpolation of the complex envelope, zero outside the window."""

    def __init__(self, w: Waveform):
        t = w.times
        self._spline = CubicSpline(t, w.samples, bc_type="natural")
        self._t0 = t[0]
        self._t1 = t[-1]

    def __call__(self, t: float) -> complex:
        if t <= self._t0 or t >= self._t1:
            # clamp to the nearest sample rather than extrapolating
            return complex(self._spline(self._t0 if t <= self._t0 else self._t1))
        return complex(self._spline(t))


def _integrate(
    w: Waveform,
    device: DeviceParams,
    noise: NoiseConfig,
    y0: np.ndarray,
    rtol: float,
    atol: float,
) -> np.ndarray:
    """Integrate dY/dt = L(t) Y over the waveform; Y has 9 rows."""
    l0, l_dd = _liouvillian_parts(device, noise)
    env = _EnvelopeSpline(w)
    has_dd = noise.drive_dephasing_k > 0
    shape = y0.shape

    def rhs(t, y):
        omega = env(t)
        lt = l0 + omega.real * _LX + omega.imag * _LY
        if has_dd:
            lt = lt + abs(omega) * l_dd
        return (lt @ y.reshape(shape)).ravel()

    sol = solve_ivp(
        rhs,
        (0.0, w.duration),
        y0.ravel(),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=False,
    )
    if not sol.success:
        raise SimulationError(f"propagator integration failed: {sol.message}")
    return sol.y[:, -1].reshape(shape)


def _fold_leakage(rho3: np.ndarray) -> np.ndarray:
    """CPTP compression 3-level -> qubit: Kraus {P01, |1><2|}.

    Operates on arbitrary (not necessarily Hermitian) matrices so it can be
    applied column-by-column when assembling a superoperator.
    """
    out = rho3[:2, :2].copy()
    out[1, 1] += rho3[2, 2]
    return out


def _embed(rho2: np.ndarray) -> np.ndarray:
    out = np.zeros((DIM, DIM), dtype=complex)
    out[:2, :2] = rho2
    return out


def propagate(
    w: Waveform,
    device: DeviceParams,
    noise: NoiseConfig = NOISELESS,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> Channel:
    """Qubit channel implemented by driving the three-level system with w.

    The full 9x9 propagator is integrated once; the returned 4x4 channel is
    (leakage fold) o (three-level evolution) o (qubit embedding), which is
    CPTP up to integrator error.
    """
    m = _integrate(w, device, noise, np.eye(DIM * DIM, dtype=complex), rtol, atol)
    s = np.zeros((4, 4), dtype=complex)
    for j_in in range(2):
        for i_in in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i_in, j_in] = 1.0
            evolved = (m @ _embed(e).reshape(DIM * DIM, order="F")).reshape(
                (DIM, DIM), order="F"
            )
            s[:, i_in + 2 * j_in] = _fold_leakage(evolved).reshape(4, order="F")
    return Channel(s)


def propagate_density(
    w: Waveform,
    device: DeviceParams,
    noise: NoiseConfig = NOISELESS,
    rho0: np.ndarray | None = None,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> np.ndarray:
    """Evolve a single three-level density matrix through the waveform.

    Cheaper than propagate() when only one initial state is needed (long
    composite sequences). Returns the final 3x3 density matrix; no leakage
    folding is applied.
    """
    if rho0 is None:
        rho0 = np.zeros((DIM, DIM), dtype=complex)
        rho0[0, 0] = 1.0
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (DIM, DIM):
        raise ConfigError("rho0 must be 3x3")
    vec = _integrate(w, device, noise, rho0.reshape(DIM * DIM, order="F"), rtol, atol)
    rho = vec.reshape((DIM, DIM), order="F")
    return 0.5 * (rho + rho.conj().T)


def ground_population3(rho3: np.ndarray) -> float:
    """P(|0>) of a three-level density matrix, clipped to [0, 1]."""
    return float(np.clip(rho3[0, 0].real, 0.0, 1.0))
