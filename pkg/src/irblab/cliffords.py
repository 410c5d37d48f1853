"""Single-qubit Clifford group: enumeration, composition, inversion, decomposition.

Group algebra is exact: each element is keyed by its (integer-valued) SO(3)
rotation matrix, i.e. the signed permutation of the Pauli axes it induces, so
the composition table is free of floating-point ambiguity. Unitary
representatives carry a fixed global-phase convention (det = +1, first
nonzero entry rotated to the positive real / positive imaginary half-line);
all comparisons elsewhere are phase-insensitive.

Convention used project-wide: gate sequences are listed left to right in
time order, so the matrix of a sequence is the right-to-left product, and
``compose(a, b)`` means "apply a, then b".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import IDENTITY2, SIGMA_X, SIGMA_Y, SIGMA_Z, Unitary2
from .errors import ConfigError

GROUP_ORDER = 24

#: Generator pulse kinds, in the order used for decomposition search.
PULSE_KINDS = ("I", "X90", "X-90", "X180", "Y90", "Y-90", "Y180")

#: (rotation angle, drive phase) per pulse kind; phase 0 = x axis, pi/2 = y.
PULSE_ANGLES = {
    "I": (0.0, 0.0),
    "X90": (np.pi / 2, 0.0),
    "X-90": (-np.pi / 2, 0.0),
    "X180": (np.pi, 0.0),
    "Y90": (np.pi / 2, np.pi / 2),
    "Y-90": (-np.pi / 2, np.pi / 2),
    "Y180": (np.pi, np.pi / 2),
}


@dataclass(frozen=True)
class GeneratorPulse:
    """One physical pulse from the X/Y pi and pi/2 set (plus the idle)."""

    kind: str

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ConfigError(f"unknown pulse kind {self.kind!r}; expected one of {PULSE_KINDS}")

    @property
    def angle(self) -> float:
        return PULSE_ANGLES[self.kind][0]

    @property
    def phase(self) -> float:
        return PULSE_ANGLES[self.kind][1]

    def unitary(self) -> Unitary2:
        theta, phi = PULSE_ANGLES[self.kind]
        axis_sigma = np.cos(phi) * SIGMA_X + np.sin(phi) * SIGMA_Y
        return Unitary2(np.cos(theta / 2) * IDENTITY2 - 1j * np.sin(theta / 2) * axis_sigma)


@dataclass(frozen=True)
class CliffordElement:
    """One of the 24 single-qubit Cliffords, identified by a stable index."""

    index: int
    unitary: Unitary2

    def __repr__(self):
        return f"CliffordElement({self.index})"


def _rotation_matrix(u: np.ndarray) -> np.ndarray:
    """SO(3) action of a 2x2 unitary on the Pauli vector; exact +-1/0 entries."""
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    r = np.empty((3, 3), dtype=float)
    for i, si in enumerate(paulis):
        for j, sj in enumerate(paulis):
            r[i, j] = 0.5 * np.trace(si @ u @ sj @ u.conj().T).real
    ri = np.rint(r).astype(int)
    if np.max(np.abs(r - ri)) > 1e-9:
        raise ConfigError("unitary is not a Clifford (non-integer Pauli action)")
    return ri


def _rot_key(r: np.ndarray) -> tuple:
    return tuple(int(x) for x in r.reshape(-1))


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    """Fix global phase: det = +1, then first significant entry in the
    closed upper half-plane with positive real part when nonzero."""
    det = np.linalg.det(u)
    u = u / np.sqrt(det)
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    z = flat[k]
    if z.real < -1e-12 or (abs(z.real) <= 1e-12 and z.imag < 0):
        u = -u
    return u


def _build_group():
    gen_unitaries = [GeneratorPulse(k).unitary().u for k in ("X90", "Y90")]
    elements_u = [IDENTITY2.copy()]
    keys = {_rot_key(_rotation_matrix(IDENTITY2)): 0}
    rots = [_rotation_matrix(IDENTITY2)]
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            for g in gen_unitaries:
                u = g @ elements_u[idx]
                r = _rotation_matrix(u)
                key = _rot_key(r)
                if key not in keys:
                    keys[key] = len(elements_u)
                    elements_u.append(u)
                    rots.append(r)
                    nxt.append(keys[key])
        frontier = nxt
    if len(elements_u) != GROUP_ORDER:
        raise AssertionError(f"Clifford closure produced {len(elements_u)} elements")

    elements = tuple(
        CliffordElement(i, Unitary2(_canonical_phase(u))) for i, u in enumerate(elements_u)
    )

    # index-level composition table; compose_table[a][b] = "a then b" = R_b @ R_a
    compose_table = np.empty((GROUP_ORDER, GROUP_ORDER), dtype=int)
    for a in range(GROUP_ORDER):
        for b in range(GROUP_ORDER):
            compose_table[a, b] = keys[_rot_key(rots[b] @ rots[a])]
    inverse_table = np.empty(GROUP_ORDER, dtype=int)
    for a in range(GROUP_ORDER):
        inverse_table[a] = keys[_rot_key(rots[a].T)]

    # shortest decomposition into generator pulses (time order), <= 3 pulses
    pulse_set = [k for k in PULSE_KINDS if k != "I"]
    decomp: dict[int, tuple[str, ...]] = {0: ("I",)}
    from itertools import product

    for depth in (1, 2, 3):
        for combo in product(pulse_set, repeat=depth):
            mats = [GeneratorPulse(k).unitary().u for k in combo]
            u = IDENTITY2
            for m in mats:  # time order: later pulses multiply on the left
                u = m @ u
            idx = keys[_rot_key(_rotation_matrix(u))]
            if idx not in decomp:
                decomp[idx] = combo
        if len(decomp) == GROUP_ORDER:
            break
    if len(decomp) != GROUP_ORDER:
        raise AssertionError("decomposition search did not cover the group")
    decomp_table = tuple(tuple(GeneratorPulse(k) for k in decomp[i]) for i in range(GROUP_ORDER))
    return elements, compose_table, inverse_table, decomp_table, keys


_ELEMENTS, _COMPOSE, _INVERSE, _DECOMP, _KEY_TO_INDEX = _build_group()
_COMPOSE.setflags(write=False)
_INVERSE.setflags(write=False)

#: Mean number of generator pulses per Clifford under the fixed table
#: (the identity counts as one idle pulse). Used to convert per-Clifford
#: error rates to per-generator rates.
AVG_PULSES_PER_CLIFFORD = sum(len(d) for d in _DECOMP) / GROUP_ORDER


def enumerate_elements() -> tuple[CliffordElement, ...]:
    """All 24 Cliffords; element 0 is the identity and indices are stable."""
    return _ELEMENTS


def element(index: int) -> CliffordElement:
    return _ELEMENTS[index]


def from_unitary(u: Unitary2) -> CliffordElement:
    """Element whose Pauli action matches u (phase-insensitive lookup)."""
    key = _rot_key(_rotation_matrix(u.u))
    if key not in _KEY_TO_INDEX:
        raise ConfigError("unitary is not a single-qubit Clifford")
    return _ELEMENTS[_KEY_TO_INDEX[key]]


def from_pulses(pulses: Sequence[GeneratorPulse]) -> CliffordElement:
    """Clifford realized by a time-ordered pulse sequence."""
    u = IDENTITY2
    for p in pulses:
        u = p.unitary().u @ u
    return from_unitary(Unitary2(u))


def compose(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Element for "apply a, then b"; unitaries multiply as U_b @ U_a."""
    return _ELEMENTS[_COMPOSE[a.index, b.index]]


def compose_index(a: int, b: int) -> int:
    """Index-level compose ("a then b") for hot loops over long sequences."""
    return int(_COMPOSE[a, b])


def inverse(a: CliffordElement) -> CliffordElement:
    return _ELEMENTS[_INVERSE[a.index]]


def inverse_index(a: int) -> int:
    return int(_INVERSE[a])


def composition_table() -> np.ndarray:
    """Read-only (24, 24) index table; table[a, b] = index of "a then b"."""
    return _COMPOSE


def inversion_table() -> np.ndarray:
    """Read-only (24,) index table of group inverses."""
    return _INVERSE


def compose_sequence(sequence: Sequence[CliffordElement]) -> CliffordElement:
    acc = _ELEMENTS[0]
    for c in sequence:
        acc = compose(acc, c)
    return acc


def recovery_gate(sequence: Sequence[CliffordElement]) -> CliffordElement:
    """Element that appended to the sequence makes it compose to the identity."""
    if not sequence:
        raise ConfigError("recovery gate of an empty sequence is undefined")
    return inverse(compose_sequence(sequence))


def decompose(a: CliffordElement) -> tuple[GeneratorPulse, ...]:
    """Time-ordered generator pulses realizing the element (at most 3)."""
    return _DECOMP[a.index]


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> bool:
    """True when u = e^{i phi} v for some phi."""
    inner = np.trace(u.conj().T @ v)
    if abs(inner) < tol:
        return False
    phase = inner / abs(inner)
    return bool(np.max(np.abs(u * phase - v)) < tol)
