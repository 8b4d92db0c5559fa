"""Directional-coupler realization of composite sequences (coupled-mode theory).

Two parallel waveguides at centre-to-centre gap ``g`` exchange power with
coupling ``a * exp(-b * g)``.  A width mismatch shifts the propagation
constants; with a linear dispersion ``beta(w) = beta0 + dbeta_dw * (w - w1)``
the phase mismatch of a segment is ``(beta(w1) - beta(w2)) / 2``.  Along
the propagation coordinate the mode amplitudes obey the same two-level
equation as a driven qubit, so segments map one-to-one onto pulses and
segment lengths onto durations.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .dynamics import CompositeSequence, Pulse, evolve_trace, fidelity_batch
from .errors import InvalidArgumentError, InvalidGeometryError
from .robustness import FidelityGrid, ScanRange

# Relative width change of waveguide 2 for the first segment of the
# published silicon-on-silica layouts, keyed by (order, N).
REFERENCE_WIDTH_STEPS = {
    ("first", 2): 0.034,
    ("first", 3): 0.057,
    ("second", 3): 0.107,
}


@dataclass(frozen=True)
class DispersionModel:
    a: float
    b: float
    dbeta_dw: float
    w1: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "dbeta_dw", "w1"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")
        if self.a <= 0 or self.b <= 0 or self.w1 <= 0:
            raise InvalidArgumentError("a, b and w1 must be > 0")
        if self.dbeta_dw == 0:
            raise InvalidArgumentError("dbeta_dw must be non-zero")

    @classmethod
    def calibrated(cls, a, b, delta, width_ratio, w1=1.0) -> "DispersionModel":
        """Model whose slope maps detuning ``delta`` onto ``w2/w1 = width_ratio``."""
        if width_ratio == 1.0:
            raise InvalidArgumentError("calibration needs a width change")
        return cls(a, b, -2.0 * delta / (w1 * (width_ratio - 1.0)), w1)

    def mismatch(self, width_ratio):
        """Phase mismatch ``(beta1 - beta2)/2`` of a segment with ``w2 = width_ratio * w1``."""
        return -0.5 * self.dbeta_dw * self.w1 * (np.asarray(width_ratio, dtype=float) - 1.0)

    def width_ratio(self, mismatch):
        return 1.0 - 2.0 * np.asarray(mismatch, dtype=float) / (self.dbeta_dw * self.w1)


@dataclass(frozen=True)
class WaveguideDevice:
    gap: float
    segments: Tuple[Tuple[float, float], ...]
    label: str = ""

    def __post_init__(self):
        segs = tuple((float(r), float(l)) for r, l in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise InvalidGeometryError("a device needs at least one segment")
        if not (math.isfinite(self.gap) and self.gap >= 0):
            raise InvalidGeometryError(f"gap must be finite and >= 0, got {self.gap!r}")
        for r, l in segs:
            if not (math.isfinite(r) and r > 0):
                raise InvalidGeometryError(f"width ratio must be > 0, got {r!r}")
            if not (math.isfinite(l) and l > 0):
                raise InvalidGeometryError(f"segment length must be > 0, got {l!r}")

    @property
    def width_ratios(self) -> np.ndarray:
        return np.array([r for r, _ in self.segments])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([l for _, l in self.segments])

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())


def coupling_from_gap(m: DispersionModel, g: float) -> float:
    if not (math.isfinite(g) and g >= 0):
        raise InvalidArgumentError(f"gap must be finite and >= 0, got {g!r}")
    return m.a * math.exp(-m.b * g)


def device_from_sequence(seq: CompositeSequence, m: DispersionModel, g: float) -> WaveguideDevice:
    """Lay out one segment per pulse.

    Detunings are taken relative to each pulse's coupling and re-expressed
    with the coupling set by the gap, so normalized designs can be used
    directly.
    """
    omega = coupling_from_gap(m, g)
    delta = omega * seq.ratios
    ratios = m.width_ratio(delta)
    if np.any(ratios <= 0):
        raise InvalidGeometryError(f"mismatch requires non-positive widths: {ratios.tolist()}")
    lengths = seq.nominal_area / np.hypot(omega, delta)
    return WaveguideDevice(g, tuple(zip(ratios.tolist(), lengths.tolist())), label=seq.label)


def sequence_from_device(dev: WaveguideDevice, m: DispersionModel, mismatch_scale=1.0,
                         length_scale=1.0) -> CompositeSequence:
    """Equivalent pulse sequence, optionally with mismatch and length errors folded in."""
    omega = coupling_from_gap(m, dev.gap)
    delta = m.mismatch(dev.width_ratios) * mismatch_scale
    areas = np.hypot(omega, delta) * dev.lengths * length_scale
    return CompositeSequence(tuple(Pulse(omega, float(d), float(a)) for d, a in zip(delta, areas)),
                             label=dev.label)


def simulate_device(dev: WaveguideDevice, m: DispersionModel, n_steps_per_segment: int = 100,
                    length_scale: float = 1.0, mismatch_scale: float = 1.0) -> np.ndarray:
    """Propagate light launched into waveguide 1.

    Returns rows ``(z, I1, I2)``; ``I2`` in the last row is the transfer
    fidelity of the device.
    """
    if not (math.isfinite(length_scale) and length_scale > 0):
        raise InvalidArgumentError("length_scale must be > 0")
    if not math.isfinite(mismatch_scale):
        raise InvalidArgumentError("mismatch_scale must be finite")
    seq = sequence_from_device(dev, m, mismatch_scale, length_scale)
    return evolve_trace(seq, n_steps_per_segment)


def device_error_map(dev: WaveguideDevice, m: DispersionModel, mismatch_range: ScanRange,
                     length_range: ScanRange) -> FidelityGrid:
    """Final ``I2`` over relative mismatch error (axis 1) and relative length error (axis 2)."""
    if length_range.lo <= -1:
        raise InvalidArgumentError("length error must stay above -1")
    seq = sequence_from_device(dev, m)
    uu, vv = np.meshgrid(mismatch_range.values, length_range.values, indexing="ij")
    f = fidelity_batch(seq, area_scale=1.0 + vv.ravel(), detuning_scale=1.0 + uu.ravel())
    return FidelityGrid(mismatch_range, "mismatch_error", f.reshape(uu.shape), length_range,
                        "length_error", meta={"device": dev.label})
