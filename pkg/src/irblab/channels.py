"""Exact linear algebra for single-qubit states, unitaries and channels.

Superoperators use column-stacking vectorization throughout the package:
vec(rho) stacks the columns of rho, so vec(A rho B) = (B^T kron A) vec(rho).
For a 2x2 rho the vec ordering is [rho00, rho10, rho01, rho11].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TRACE_TOL = 1e-12
HERM_TOL = 1e-12
UNITARY_TOL = 1e-12
TP_TOL = 1e-10
CP_TOL = 1e-10

# Pauli matrices
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

_VEC_I = np.array([1, 0, 0, 1], dtype=complex)  # vec(I), column stacking


def _vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(2, 2, order="F")


@dataclass(frozen=True)
class QubitState:
    """Single-qubit density matrix. Immutable after construction."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ConfigError(f"density matrix must be 2x2, got {rho.shape}")
        if abs(np.trace(rho) - 1.0) > TRACE_TOL:
            raise ConfigError(f"density matrix trace {np.trace(rho)} != 1")
        if np.max(np.abs(rho - rho.conj().T)) > HERM_TOL:
            raise ConfigError("density matrix is not Hermitian")
        evals = np.linalg.eigvalsh(rho)
        if evals.min() < -1e-10 or evals.max() > 1 + 1e-10:
            raise ConfigError(f"density matrix eigenvalues {evals} outside [0, 1]")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @staticmethod
    def ground() -> "QubitState":
        return QubitState(np.array([[1, 0], [0, 0]], dtype=complex))

    @staticmethod
    def excited() -> "QubitState":
        return QubitState(np.array([[0, 0], [0, 1]], dtype=complex))

    @staticmethod
    def from_ket(psi: np.ndarray) -> "QubitState":
        psi = np.asarray(psi, dtype=complex).reshape(2)
        psi = psi / np.linalg.norm(psi)
        return QubitState(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class Unitary2:
    """2x2 unitary matrix. Immutable after construction."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ConfigError(f"unitary must be 2x2, got {u.shape}")
        if np.max(np.abs(u @ u.conj().T - IDENTITY2)) > UNITARY_TOL:
            raise ConfigError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    def dagger(self) -> "Unitary2":
        return Unitary2(self.u.conj().T)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(self.u @ other.u)

    @staticmethod
    def identity() -> "Unitary2":
        return Unitary2(IDENTITY2)


@dataclass(frozen=True)
class Channel:
    """CPTP map as a 4x4 superoperator on column-stacked density matrices."""

    superop: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        if s.shape != (4, 4):
            raise ConfigError(f"superoperator must be 4x4, got {s.shape}")
        # trace preservation: the dual maps I to I
        if np.max(np.abs(s.conj().T @ _VEC_I - _VEC_I)) > TP_TOL:
            raise ConfigError("channel is not trace-preserving")
        ev = np.linalg.eigvalsh(choi_matrix(s))
        if ev.min() < -CP_TOL:
            raise ConfigError(f"channel is not completely positive (Choi eigenvalue {ev.min()})")
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    @staticmethod
    def identity() -> "Channel":
        return Channel(np.eye(4, dtype=complex))


@dataclass(frozen=True)
class FidelityPair:
    """Average gate fidelity F and depolarizing parameter alpha = 2F - 1."""

    avg_fidelity: float
    depol_param: float

    def __post_init__(self):
        if not (0.0 <= self.avg_fidelity <= 1.0 + 1e-12):
            raise ConfigError(f"average fidelity {self.avg_fidelity} outside [0, 1]")
        if self.depol_param != 2.0 * self.avg_fidelity - 1.0:
            raise ConfigError("alpha must equal 2F - 1 exactly")

    @staticmethod
    def from_fidelity(f: float) -> "FidelityPair":
        f = float(f)
        return FidelityPair(avg_fidelity=f, depol_param=2.0 * f - 1.0)


def choi_matrix(superop: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator (column-stacking convention).

    J = (E ox id)(|Omega><Omega|) with |Omega> = sum_i |ii>, unnormalized.
    Trace of J equals the dimension for a trace-preserving map.
    """
    s4 = np.asarray(superop, dtype=complex).reshape(2, 2, 2, 2)
    return s4.transpose(1, 3, 0, 2).reshape(4, 4)


def is_cptp(superop: np.ndarray, tp_tol: float = TP_TOL, cp_tol: float = CP_TOL) -> bool:
    s = np.asarray(superop, dtype=complex)
    if np.max(np.abs(s.conj().T @ _VEC_I - _VEC_I)) > tp_tol:
        return False
    return np.linalg.eigvalsh(choi_matrix(s)).min() >= -cp_tol


def kraus_to_channel(kraus_ops) -> Channel:
    """Build a channel from a list of 2x2 Kraus operators."""
    s = np.zeros((4, 4), dtype=complex)
    for k in kraus_ops:
        k = np.asarray(k, dtype=complex)
        s += np.kron(k.conj(), k)
    return Channel(s)


def unitary_channel(u: Unitary2) -> Channel:
    """Channel rho -> U rho U^dagger."""
    return Channel(np.kron(u.u.conj(), u.u))


def compose(a: Channel, b: Channel) -> Channel:
    """Channel applying `a` first, then `b` (time order left to right)."""
    return Channel(b.superop @ a.superop)


def compose_all(channels) -> Channel:
    """Compose a time-ordered iterable of channels."""
    s = np.eye(4, dtype=complex)
    for c in channels:
        s = c.superop @ s
    return Channel(s)


def apply(c: Channel, s: QubitState) -> QubitState:
    rho = _unvec(c.superop @ _vec(s.rho))
    # kill numerical Hermiticity drift before revalidation
    rho = 0.5 * (rho + rho.conj().T)
    return QubitState(rho)


def ground_population(s: QubitState) -> float:
    """P(|0>) = <0|rho|0>."""
    p = float(s.rho[0, 0].real)
    return min(max(p, 0.0), 1.0)


def overrotation_unitary(epsilon: float, axis) -> Unitary2:
    """Rotation exp(-i epsilon/2 (axis . sigma)) about a unit Bloch axis."""
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise ConfigError(f"axis must be a 3-vector, got shape {axis.shape}")
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ConfigError(f"axis must be a unit vector, |axis| = {np.linalg.norm(axis)}")
    n_dot_sigma = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
    half = 0.5 * epsilon
    return Unitary2(np.cos(half) * IDENTITY2 - 1j * np.sin(half) * n_dot_sigma)


def rotation(angle: float, phase: float) -> Unitary2:
    """Rotation by `angle` about the equatorial axis (cos phase, sin phase, 0)."""
    return overrotation_unitary(angle, (np.cos(phase), np.sin(phase), 0.0))


def avg_fidelity_vs_identity(u: Unitary2) -> FidelityPair:
    """Average fidelity of a unitary against the identity: F = (|tr u|^2 + 2)/6."""
    t = abs(np.trace(u.u)) ** 2
    return FidelityPair.from_fidelity((t + 2.0) / 6.0)


def avg_gate_fidelity(actual: Channel, target: Unitary2) -> FidelityPair:
    """Average gate fidelity of a channel against a target unitary.

    Uses the entanglement-fidelity relation F = (d * F_pro + 1)/(d + 1) with
    d = 2, where F_pro = Tr(S_target^dag S_actual)/d^2. Equals the Haar
    average of state fidelity, and reduces to avg_fidelity_vs_identity for
    unitary channels measured against the identity.
    """
    s_err = unitary_channel(target.dagger()).superop @ actual.superop
    f_pro = np.trace(s_err).real / 4.0
    f = (2.0 * f_pro + 1.0) / 3.0
    # clamp the last-ulp wobble so FidelityPair's range check stays exact
    f = min(max(f, 0.0), 1.0)
    return FidelityPair.from_fidelity(f)


def decoherence_channel(duration: float, t1: float, t2: float) -> Channel:
    """Free decay channel: amplitude damping (rate 1/T1) with pure dephasing.

    The pure dephasing rate is 1/T_phi = 1/T2 - 1/(2 T1); T2 <= 2 T1 is
    required for the map to be physical.
    """
    if t1 <= 0 or t2 <= 0:
        raise ConfigError("T1 and T2 must be positive")
    if t2 > 2.0 * t1 + 1e-15 * t1:
        raise ConfigError(f"T2 = {t2} exceeds the physical bound 2*T1 = {2 * t1}")
    if duration < 0:
        raise ConfigError("duration must be non-negative")
    g1 = np.exp(-duration / t1)          # excited population survival
    g2 = np.exp(-duration / t2)          # coherence survival
    s = np.zeros((4, 4), dtype=complex)
    # vec ordering [rho00, rho10, rho01, rho11]
    s[0, 0] = 1.0
    s[0, 3] = 1.0 - g1
    s[1, 1] = g2
    s[2, 2] = g2
    s[3, 3] = g1
    return Channel(s)


def depolarizing_channel(p: float) -> Channel:
    """Depolarizing channel rho -> p*rho + (1-p)*I/2; its RB decay base is p."""
    if not -0.5 <= p <= 1.0:
        raise ConfigError(f"depolarizing parameter {p} outside [-1/2, 1]")
    s = p * np.eye(4, dtype=complex)
    # (1-p) * |I/2)(vec I|  : maps any unit-trace rho to I/2
    s += (1.0 - p) * 0.5 * np.outer(_VEC_I, _VEC_I.conj())
    return Channel(s)
