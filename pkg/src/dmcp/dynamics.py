"""Exact evolution of a driven two-level system under constant pulses.

Conventions: the Hamiltonian of one pulse is ``(1/2) [[-delta, rabi],
[rabi, delta]]`` (hbar = 1), pulses are applied in list order, and the
composite propagator is ``U_N ... U_2 U_1``.  Rates are in units of a
reference coupling, times in units of its inverse.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _accel
from .errors import InvalidArgumentError


def _finite(name, value):
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Pulse:
    """One segment with constant coupling ``rabi`` and detuning ``detuning``."""

    rabi: float
    detuning: float
    nominal_area: float = math.pi

    def __post_init__(self):
        for name in ("rabi", "detuning", "nominal_area"):
            _finite(name, float(getattr(self, name)))
        if self.rabi <= 0:
            raise InvalidArgumentError(f"rabi must be > 0, got {self.rabi!r}")
        if self.nominal_area <= 0:
            raise InvalidArgumentError(f"nominal_area must be > 0, got {self.nominal_area!r}")

    @property
    def generalized_rabi(self) -> float:
        return math.hypot(self.rabi, self.detuning)

    @property
    def duration(self) -> float:
        """Time needed to accumulate ``nominal_area``."""
        return self.nominal_area / self.generalized_rabi


@dataclass(frozen=True)
class CompositeSequence:
    pulses: Tuple[Pulse, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if not self.pulses:
            raise InvalidArgumentError("a composite sequence needs at least one pulse")

    @classmethod
    def from_ratios(cls, ratios, rabi=1.0, label="", nominal_area=math.pi):
        """Equal-coupling sequence with detunings ``rabi * ratios``."""
        return cls(tuple(Pulse(rabi, rabi * float(x), nominal_area) for x in ratios), label)

    def __len__(self):
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    @property
    def rabi(self) -> np.ndarray:
        return np.array([p.rabi for p in self.pulses])

    @property
    def detuning(self) -> np.ndarray:
        return np.array([p.detuning for p in self.pulses])

    @property
    def nominal_area(self) -> np.ndarray:
        return np.array([p.nominal_area for p in self.pulses])

    @property
    def durations(self) -> np.ndarray:
        return np.array([p.duration for p in self.pulses])

    @property
    def ratios(self) -> np.ndarray:
        """Detuning-to-coupling ratios ``delta_n / rabi_n``."""
        return self.detuning / self.rabi


@dataclass(frozen=True)
class Unitary2:
    u11: complex
    u12: complex
    u21: complex
    u22: complex

    @classmethod
    def from_array(cls, a) -> "Unitary2":
        a = np.asarray(a, dtype=complex)
        return cls(complex(a[0, 0]), complex(a[0, 1]), complex(a[1, 0]), complex(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]], dtype=complex)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2.from_array(self.as_array() @ other.as_array())

    def dagger(self) -> "Unitary2":
        return Unitary2(self.u11.conjugate(), self.u21.conjugate(),
                        self.u12.conjugate(), self.u22.conjugate())

    def det(self) -> complex:
        return self.u11 * self.u22 - self.u12 * self.u21

    def unitarity_error(self) -> float:
        """Largest entry of ``|U U^dagger - I|``."""
        a = self.as_array()
        return float(np.max(np.abs(a @ a.conj().T - np.eye(2))))

    def is_unitary(self, tol=1e-12) -> bool:
        return self.unitarity_error() < tol

    @property
    def transfer_probability(self) -> float:
        return abs(self.u12) ** 2

    def apply(self, state: "StateVector") -> "StateVector":
        return StateVector(self.u11 * state.c1 + self.u12 * state.c2,
                           self.u21 * state.c1 + self.u22 * state.c2)


@dataclass(frozen=True)
class StateVector:
    c1: complex
    c2: complex
    tol: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self):
        norm = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if not abs(norm - 1.0) <= self.tol:
            raise InvalidArgumentError(f"state is not normalized (|c1|^2+|c2|^2 = {norm!r})")

    @classmethod
    def ground(cls) -> "StateVector":
        return cls(1.0 + 0j, 0j)

    @property
    def populations(self) -> Tuple[float, float]:
        return abs(self.c1) ** 2, abs(self.c2) ** 2


def _positive_scale(name, value):
    _finite(name, value)
    if value <= 0:
        raise InvalidArgumentError(f"{name} must be > 0, got {value!r}")


def pulse_propagator(p: Pulse, area_scale: float = 1.0) -> Unitary2:
    """Closed-form propagator of a single pulse with area ``nominal_area * area_scale``.

    ``[[c + i (delta/g) s, -i (rabi/g) s], [-i (rabi/g) s, c - i (delta/g) s]]``
    with ``c, s = cos(A/2), sin(A/2)`` and ``g`` the generalized Rabi
    frequency.  Shares the kernel of :func:`compose_sequence`, so a
    one-pulse composition is bit-identical.
    """
    return compose_sequence(CompositeSequence((p,)), area_scale)


def pi_duration(p: Pulse) -> float:
    return math.pi / p.generalized_rabi


def perturbed_arrays(seq: CompositeSequence, area_scale=1.0, detuning_scale=1.0,
                     coupling_scale=1.0, detuning_offset=0.0, per_pulse_scales=None):
    """Broadcast error parameters into ``(M, N)`` kernel inputs.

    Durations are fixed by the nominal design (``nominal_area / Omega_g``)
    and then stretched by ``area_scale * per_pulse_scales``; coupling and
    detuning errors act on top of those fixed durations, so they also move
    the accumulated area.  ``detuning_offset`` is an absolute detuning error
    in units of each pulse's own coupling.

    Scalar-or-``(M,)`` arguments broadcast against each other;
    ``per_pulse_scales`` may be ``(N,)`` or ``(M, N)``.
    """
    n = len(seq)
    rabi, detuning, t0 = seq.rabi, seq.detuning, seq.durations

    area_scale = np.atleast_1d(np.asarray(area_scale, dtype=float))
    detuning_scale = np.atleast_1d(np.asarray(detuning_scale, dtype=float))
    coupling_scale = np.atleast_1d(np.asarray(coupling_scale, dtype=float))
    detuning_offset = np.atleast_1d(np.asarray(detuning_offset, dtype=float))
    for name, arr in (("area_scale", area_scale), ("detuning_scale", detuning_scale),
                      ("coupling_scale", coupling_scale), ("detuning_offset", detuning_offset)):
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError(f"{name} must be finite")
    if np.any(area_scale <= 0):
        raise InvalidArgumentError("area_scale must be > 0")
    if np.any(coupling_scale < 0):
        raise InvalidArgumentError("coupling_scale must be >= 0")

    m = np.broadcast_shapes(area_scale.shape, detuning_scale.shape,
                            coupling_scale.shape, detuning_offset.shape)
    if len(m) != 1:
        raise InvalidArgumentError("error parameters must be scalars or 1-D arrays")

    scale = area_scale[:, None]
    if per_pulse_scales is not None:
        pps = np.asarray(per_pulse_scales, dtype=float)
        if pps.shape[-1] != n or pps.ndim > 2:
            raise InvalidArgumentError(
                f"per_pulse_scales must have length {n} along its last axis, got shape {pps.shape}")
        if not np.all(np.isfinite(pps)) or np.any(pps <= 0):
            raise InvalidArgumentError("per_pulse_scales must be finite and > 0")
        scale = scale * np.atleast_2d(pps)

    omega = rabi[None, :] * coupling_scale[:, None]
    delta = detuning[None, :] * detuning_scale[:, None] + rabi[None, :] * detuning_offset[:, None]
    duration = t0[None, :] * scale
    omega, delta, duration = np.broadcast_arrays(omega, delta, duration)
    return omega, delta, duration


def fidelity_batch(seq: CompositeSequence, area_scale=1.0, detuning_scale=1.0,
                   coupling_scale=1.0, detuning_offset=0.0, per_pulse_scales=None) -> np.ndarray:
    """Vectorised :func:`transfer_fidelity`; returns ``|u12|^2`` per parameter row."""
    u = _accel.compose_batch(*perturbed_arrays(seq, area_scale, detuning_scale, coupling_scale,
                                               detuning_offset, per_pulse_scales))
    return np.abs(u[:, 1]) ** 2


def compose_sequence(seq: CompositeSequence, area_scale: float = 1.0,
                     per_pulse_scales: Optional[Sequence[float]] = None) -> Unitary2:
    """Composite propagator ``U_N ... U_1`` (pulse 1 acts first).

    Pulse ``n`` receives area ``nominal_area * area_scale * per_pulse_scales[n]``.
    """
    area_scale = float(area_scale)
    _positive_scale("area_scale", area_scale)
    if per_pulse_scales is not None:
        per_pulse_scales = np.asarray(per_pulse_scales, dtype=float)
        if per_pulse_scales.shape != (len(seq),):
            raise InvalidArgumentError(
                f"per_pulse_scales has {per_pulse_scales.size} entries, sequence has {len(seq)}")
    u = _accel.compose_batch(*perturbed_arrays(seq, area_scale, per_pulse_scales=per_pulse_scales))
    return Unitary2(*(complex(v) for v in u[0]))


def transfer_fidelity(seq: CompositeSequence, area_scale: float = 1.0, detuning_scale: float = 1.0,
                      coupling_scale: float = 1.0, detuning_offset: float = 0.0) -> float:
    """Population transferred from state 1 to state 2 under systematic errors.

    Couplings become ``rabi * coupling_scale``, detunings
    ``detuning * detuning_scale + detuning_offset * rabi`` (a resonant pulse
    is untouched by a purely relative detuning error), and every pulse keeps
    its nominal duration times ``area_scale``.
    """
    return float(fidelity_batch(seq, area_scale, detuning_scale, coupling_scale, detuning_offset)[0])


def evolve_trace(seq: CompositeSequence, n_steps_per_pulse: int = 100,
                 initial: Optional[StateVector] = None) -> np.ndarray:
    """Sample populations along the nominal evolution.

    Returns an array of shape ``(n_steps_per_pulse * N + 1, 3)`` with
    columns ``time, |c1|^2, |c2|^2``.  The first row is the initial state;
    each pulse contributes ``n_steps_per_pulse`` uniformly spaced samples
    ending at its boundary.
    """
    n_steps_per_pulse = int(n_steps_per_pulse)
    if n_steps_per_pulse < 2:
        raise InvalidArgumentError("n_steps_per_pulse must be >= 2")
    if initial is None:
        initial = StateVector.ground()

    state = np.array([initial.c1, initial.c2], dtype=complex)
    rows = [(0.0, abs(state[0]) ** 2, abs(state[1]) ** 2)]
    t_start = 0.0
    frac = np.arange(1, n_steps_per_pulse + 1) / n_steps_per_pulse
    for p in seq:
        tau = p.duration * frac
        k = np.ones(n_steps_per_pulse)
        u = _accel.compose_batch((p.rabi * k)[:, None], (p.detuning * k)[:, None], tau[:, None])
        c1 = u[:, 0] * state[0] + u[:, 1] * state[1]
        c2 = u[:, 2] * state[0] + u[:, 3] * state[1]
        for t, a, b in zip(t_start + tau, np.abs(c1) ** 2, np.abs(c2) ** 2):
            rows.append((t, a, b))
        state = np.array([c1[-1], c2[-1]])
        t_start += p.duration
    return np.array(rows)
