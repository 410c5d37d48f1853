"""Gate backends: map pulse kinds and Clifford elements to qubit channels.

Two implementations share one duck-typed interface:

* ExactBackend — ideal rotations with optional injected coherent errors,
  analytic decoherence per pulse, and an optional depolarizing channel per
  Clifford. Fast; used for protocol-level studies where the microscopic
  pulse physics is irrelevant.
* PulseBackend — drives the three-level transmon simulation for every pulse
  kind and caches the resulting channels. Clifford channels are composed
  from the pulse decomposition. When a drive-line filter is active,
  sequence_survival() integrates the whole concatenated waveform so that
  pulse tails genuinely overlap the following pulses.

Both expose: pulse_channel, clifford_channel, clifford_superops,
sequence_survival, apply_readout, gate_duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cliffords
from .channels import (
    Channel,
    QubitState,
    apply,
    compose_all,
    decoherence_channel,
    depolarizing_channel,
    ground_population,
    rotation,
    unitary_channel,
)
from .cliffords import PULSE_ANGLES, CliffordElement
from .errors import ConfigError
from .pulses import (
    GateSpec,
    Waveform,
    area_condition_amplitude,
    concatenate,
    drive_line_filter,
    gaussian_drag_waveform,
    pad,
)
from .transmon import (
    DeviceParams,
    NoiseConfig,
    NOISELESS,
    ground_population3,
    propagate,
    propagate_density,
)


@dataclass(frozen=True)
class ReadoutModel:
    """Affine readout map p -> scale * p + offset (state-preparation and
    measurement imperfection). scale=1, offset=0 is ideal."""

    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.scale <= 1.0):
            raise ConfigError("readout scale must be in (0, 1]")
        if self.offset < 0.0 or self.scale + self.offset > 1.0:
            raise ConfigError("readout must map [0, 1] into [0, 1]")

    def __call__(self, p: float) -> float:
        return self.scale * p + self.offset


IDEAL_READOUT = ReadoutModel()


def _noisy_angle_phase(kind: str, noise: NoiseConfig) -> tuple[float, float]:
    """Rotation angle and axis phase of a pulse kind after coherent errors."""
    angle, phase = PULSE_ANGLES[kind]
    if kind == noise.overrotation_target:
        angle = angle + noise.overrotation_epsilon
    if kind.startswith("Y"):
        phase = phase + noise.axis_skew
    return angle, phase


def _kind(pulse) -> str:
    """Accept either a pulse-kind string or a GeneratorPulse."""
    return pulse if isinstance(pulse, str) else pulse.kind


class _ChannelCache:
    """Shared plumbing: caches per-pulse and per-Clifford channels."""

    def __init__(self):
        self._pulse: dict[str, Channel] = {}
        self._clifford: dict[int, Channel] = {}
        self._stack: np.ndarray | None = None

    def pulse_channel(self, pulse) -> Channel:
        kind = _kind(pulse)
        if kind not in self._pulse:
            self._pulse[kind] = self._build_pulse_channel(kind)
        return self._pulse[kind]

    def _build_pulse_channel(self, kind: str) -> Channel:  # pragma: no cover
        raise NotImplementedError

    def clifford_channel(self, c: CliffordElement | int) -> Channel:
        idx = c.index if isinstance(c, CliffordElement) else int(c)
        if idx not in self._clifford:
            self._clifford[idx] = self._build_clifford_channel(idx)
        return self._clifford[idx]

    def _build_clifford_channel(self, idx: int) -> Channel:
        kinds = cliffords.decompose(cliffords.element(idx))
        return compose_all([self.pulse_channel(k) for k in kinds])

    @property
    def clifford_superops(self) -> np.ndarray:
        """(24, 4, 4) array of all Clifford channels (cached)."""
        if self._stack is None:
            self._stack = np.stack(
                [self.clifford_channel(i).superop for i in range(cliffords.GROUP_ORDER)]
            )
            self._stack.setflags(write=False)
        return self._stack

    def sequence_channel(self, kinds) -> Channel:
        return compose_all([self.pulse_channel(k) for k in kinds])

    def sequence_survival(self, kinds) -> float:
        """Exact ground-state survival probability of a pulse sequence,
        readout included."""
        rho = apply(self.sequence_channel(kinds), QubitState.ground())
        return self.apply_readout(ground_population(rho))

    def apply_readout(self, p: float) -> float:
        return self.readout(p)  # type: ignore[attr-defined]


class ExactBackend(_ChannelCache):
    """Ideal rotations plus parameterized error channels.

    Coherent errors come from NoiseConfig (over-rotation of one pulse kind,
    Y-axis skew). If decoherence is enabled a DeviceParams must be supplied
    and every pulse is followed by the analytic T1/T2 channel over
    gate_length + buffer. depolarizing_p attaches a depolarizing channel
    with parameter p after every Clifford (gate-independent by
    construction); it does not affect pulse-level channels.
    """

    def __init__(
        self,
        noise: NoiseConfig = NOISELESS,
        device: DeviceParams | None = None,
        *,
        gate_length: float = 16.7e-9,
        buffer: float = 0.0,
        depolarizing_p: float | None = None,
        readout: ReadoutModel = IDEAL_READOUT,
    ):
        super().__init__()
        if noise.decoherence and device is None:
            raise ConfigError("decoherence requires DeviceParams")
        if depolarizing_p is not None and not (0.0 <= depolarizing_p <= 1.0):
            raise ConfigError("depolarizing_p must lie in [0, 1]")
        if gate_length <= 0 or buffer < 0:
            raise ConfigError("gate_length must be positive, buffer non-negative")
        self.noise = noise
        self.device = device
        self.gate_length = gate_length
        self.buffer = buffer
        self.depolarizing_p = depolarizing_p
        self.readout = readout

    @property
    def gate_duration(self) -> float:
        return self.gate_length + self.buffer

    def pulse_unitary(self, kind: str):
        angle, phase = _noisy_angle_phase(kind, self.noise)
        return rotation(angle, phase)

    def _build_pulse_channel(self, kind: str) -> Channel:
        ch = unitary_channel(self.pulse_unitary(kind))
        if self.noise.decoherence:
            assert self.device is not None
            decay = decoherence_channel(self.gate_duration, self.device.t1, self.device.t2)
            ch = compose_all([ch, decay])
        return ch

    def _build_clifford_channel(self, idx: int) -> Channel:
        ch = super()._build_clifford_channel(idx)
        if self.depolarizing_p is not None:
            ch = compose_all([ch, depolarizing_channel(self.depolarizing_p)])
        return ch

    def with_drag_lambda(self, lam: float) -> "ExactBackend":
        # ideal rotations have no pulse shape, so the DRAG weight is moot
        return self

    def with_buffer(self, buffer: float) -> "ExactBackend":
        return ExactBackend(
            self.noise,
            self.device,
            gate_length=self.gate_length,
            buffer=buffer,
            depolarizing_p=self.depolarizing_p,
            readout=self.readout,
        )


class PulseBackend(_ChannelCache):
    """Channels obtained by simulating shaped pulses on the transmon.

    specs maps each pulse kind to its GateSpec; missing kinds fall back to
    a template derived from the X90 spec (same length, buffer and DRAG
    weight, area-condition amplitude scaled to the kind's angle). Coherent
    noise knobs modify the specs once at construction time: over-rotation
    rescales the target kind's amplitude by (angle + eps)/angle and axis
    skew offsets the phase of Y pulses.
    """

    def __init__(
        self,
        device: DeviceParams,
        noise: NoiseConfig = NOISELESS,
        specs: dict[str, GateSpec] | None = None,
        *,
        gate_length: float = 16.7e-9,
        buffer: float = 0.0,
        drag_lambda: float = 0.0,
        readout: ReadoutModel = IDEAL_READOUT,
        rtol: float = 1e-10,
        atol: float = 1e-12,
    ):
        super().__init__()
        self.device = device
        self.noise = noise
        self.readout = readout
        self.rtol = rtol
        self.atol = atol
        base = (specs or {}).get("X90") or GateSpec(
            "X90", gate_length, buffer=buffer, drag_lambda=drag_lambda
        )
        # raw = programmed pulse parameters; noise knobs are layered on top at
        # lookup time so a rebuilt backend does not apply them twice
        self._raw_specs: dict[str, GateSpec] = {}
        self._specs: dict[str, GateSpec] = {}
        for kind in cliffords.PULSE_KINDS:
            if specs is not None and kind in specs:
                spec = specs[kind]
                if spec.target != kind:
                    raise ConfigError(f"spec for {kind!r} targets {spec.target!r}")
            else:
                spec = GateSpec(
                    kind,
                    base.gate_length,
                    amplitude=None,
                    drag_lambda=base.drag_lambda,
                    buffer=base.buffer,
                )
            self._raw_specs[kind] = spec
            self._specs[kind] = self._apply_coherent_noise(spec)

    def _apply_coherent_noise(self, spec: GateSpec) -> GateSpec:
        kind = spec.target
        updates: dict = {}
        if kind == self.noise.overrotation_target and self.noise.overrotation_epsilon:
            angle = spec.target_angle
            amp = spec.amplitude
            if amp is None:
                amp = area_condition_amplitude(spec)
            updates["amplitude"] = amp * (angle + self.noise.overrotation_epsilon) / angle
        if kind.startswith("Y") and self.noise.axis_skew:
            updates["phase"] = spec.drive_phase + self.noise.axis_skew
        return spec.with_updates(**updates) if updates else spec

    def spec(self, kind: str) -> GateSpec:
        return self._specs[kind]

    def raw_spec(self, kind: str) -> GateSpec:
        """Programmed spec before noise knobs are applied."""
        return self._raw_specs[kind]

    def with_specs(self, specs: dict[str, GateSpec]) -> "PulseBackend":
        """New backend with some programmed specs replaced; caches reset."""
        merged = {**self._raw_specs, **specs}
        return PulseBackend(
            self.device,
            self.noise,
            merged,
            readout=self.readout,
            rtol=self.rtol,
            atol=self.atol,
        )

    def with_drag_lambda(self, lam: float) -> "PulseBackend":
        return self.with_specs(
            {k: s.with_updates(drag_lambda=lam) for k, s in self._raw_specs.items()}
        )

    def with_buffer(self, buffer: float) -> "PulseBackend":
        return self.with_specs(
            {k: s.with_updates(buffer=buffer) for k, s in self._raw_specs.items()}
        )

    @property
    def gate_duration(self) -> float:
        s = self._specs["X90"]
        return s.gate_length + s.buffer

    def waveform(self, pulse) -> Waveform:
        return gaussian_drag_waveform(self._specs[_kind(pulse)], self.device.anharmonicity)

    def _build_pulse_channel(self, kind: str) -> Channel:
        w = self.waveform(kind)
        tau = self.noise.drive_filter_tau
        if tau > 0:
            # single-pulse approximation: the filtered tail is given room to
            # settle here; use sequence_survival for cross-pulse memory
            w = drive_line_filter(pad(w, 8.0 * tau), tau)
        return propagate(w, self.device, self.noise, rtol=self.rtol, atol=self.atol)

    def sequence_waveform(self, kinds) -> Waveform:
        """Concatenated (and, if configured, filtered) waveform of a sequence."""
        w = concatenate([self.waveform(k) for k in kinds])
        tau = self.noise.drive_filter_tau
        if tau > 0:
            w = drive_line_filter(pad(w, 8.0 * tau), tau)
        return w

    def sequence_survival(self, kinds) -> float:
        """Ground-state survival of a sequence played as one waveform.

        With a drive-line filter this is the physically faithful path: the
        filter acts on the joint waveform, so the smeared tail of each pulse
        overlaps the next one.
        """
        kinds = list(kinds)
        if not kinds:
            return self.apply_readout(1.0)
        if self.noise.drive_filter_tau == 0:
            return super().sequence_survival(kinds)
        rho = propagate_density(
            self.sequence_waveform(kinds),
            self.device,
            self.noise,
            rtol=self.rtol,
            atol=self.atol,
        )
        return self.apply_readout(ground_population3(rho))
