"""Robustness scans: area-error profiles, 2-D error maps, cuts and noise averages."""
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dynamics import CompositeSequence, Pulse, fidelity_batch
from .errors import InvalidArgumentError

AXIS_LABELS = ("area_error", "detuning_error", "coupling_error", "mismatch_error", "length_error")

# per-pulse area factors are clamped here so a Gaussian draw never gives a negative duration
MIN_PULSE_FACTOR = 0.01


@dataclass(frozen=True)
class ScanRange:
    lo: float
    hi: float
    n_points: int
    scale: str = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidArgumentError("scan bounds must be finite")
        if not self.lo < self.hi:
            raise InvalidArgumentError(f"scan range needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise InvalidArgumentError(f"n_points must be an integer >= 2, got {self.n_points!r}")
        if self.scale != "linear":
            raise InvalidArgumentError(f"unsupported scale {self.scale!r}")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, int(self.n_points))


@dataclass(frozen=True)
class FidelityGrid:
    """Fidelity samples on one or two error axes.

    For 2-D grids ``values[i, j]`` belongs to ``axis1.values[i]`` and
    ``axis2.values[j]``.
    """

    axis1: ScanRange
    label1: str
    values: np.ndarray
    axis2: Optional[ScanRange] = None
    label2: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for label in (self.label1, self.label2):
            if label is not None and label not in AXIS_LABELS:
                raise InvalidArgumentError(f"unknown axis label {label!r}")
        values = np.asarray(self.values, dtype=float)
        expected = (self.axis1.n_points,) if self.axis2 is None else (self.axis1.n_points, self.axis2.n_points)
        if values.shape != expected:
            raise InvalidArgumentError(f"values have shape {values.shape}, expected {expected}")
        object.__setattr__(self, "values", values)

    @property
    def ndim(self) -> int:
        return 1 if self.axis2 is None else 2

    @property
    def infidelity(self) -> np.ndarray:
        return 1.0 - self.values

    def area_above(self, level: float) -> int:
        """Number of samples with fidelity strictly above ``level``."""
        return int(np.count_nonzero(self.values > level))


@dataclass(frozen=True)
class MonteCarloCurve:
    axis: ScanRange
    mean_infidelity: np.ndarray
    sigma: float
    n_trials: int
    seed: int


@dataclass(frozen=True)
class ThresholdWidth:
    """Half-width of the error window where infidelity stays below a threshold.

    ``valid`` is False when the threshold is already exceeded at zero error
    (width 0); ``saturated`` is True when the window reaches the grid edge,
    so ``width`` is only a lower bound.
    """

    width: float
    valid: bool = True
    saturated: bool = False


def resonant_sequence(rabi: float = 1.0) -> CompositeSequence:
    return CompositeSequence((Pulse(rabi, 0.0),), label="resonant")


def scan_area_error(seq: CompositeSequence, rng: ScanRange) -> FidelityGrid:
    """Fidelity against a common relative area error ``epsilon`` of all pulses."""
    if rng.lo <= -1:
        raise InvalidArgumentError("area error must stay above -1")
    eps = rng.values
    return FidelityGrid(rng, "area_error", fidelity_batch(seq, area_scale=1.0 + eps),
                        meta={"sequence": seq.label})


def scan_2d(seq: CompositeSequence, detuning_range: ScanRange, coupling_range: ScanRange,
            detuning_error: str = "relative") -> FidelityGrid:
    """Fidelity over relative detuning error (axis 1) and relative coupling error (axis 2).

    With ``detuning_error="absolute"`` the first axis is an additive
    detuning offset in units of each pulse's coupling instead; this is the
    only meaningful detuning error for a resonant reference pulse.
    """
    if coupling_range.lo < -1:
        raise InvalidArgumentError("coupling error must be >= -1")
    u = detuning_range.values
    v = coupling_range.values
    uu, vv = np.meshgrid(u, v, indexing="ij")
    if detuning_error == "relative":
        f = fidelity_batch(seq, detuning_scale=1.0 + uu.ravel(), coupling_scale=1.0 + vv.ravel())
    elif detuning_error == "absolute":
        f = fidelity_batch(seq, detuning_offset=uu.ravel(), coupling_scale=1.0 + vv.ravel())
    else:
        raise InvalidArgumentError(f"detuning_error must be 'relative' or 'absolute', got {detuning_error!r}")
    return FidelityGrid(detuning_range, "detuning_error", f.reshape(uu.shape), coupling_range,
                        "coupling_error", meta={"sequence": seq.label, "detuning_error": detuning_error})


def extract_cut(grid: FidelityGrid, along: str = "axis1", at: float = 0.0) -> FidelityGrid:
    """1-D slice of a grid along ``along`` at the sample of the other axis nearest to ``at``.

    ``meta`` records ``fixed_coordinate`` (the grid value actually used) and
    ``snap_distance``.
    """
    if along not in ("axis1", "axis2"):
        raise InvalidArgumentError(f"along must be 'axis1' or 'axis2', got {along!r}")
    if grid.ndim == 1:
        if along != "axis1":
            raise InvalidArgumentError("a 1-D grid has only axis1")
        return replace(grid, values=grid.values.copy(), meta=dict(grid.meta))

    other = grid.axis2 if along == "axis1" else grid.axis1
    if not other.lo <= at <= other.hi:
        raise InvalidArgumentError(f"cut position {at} outside [{other.lo}, {other.hi}]")
    coords = other.values
    idx = int(np.argmin(np.abs(coords - at)))
    meta = dict(grid.meta)
    meta.update(fixed_axis=grid.label2 if along == "axis1" else grid.label1,
                fixed_coordinate=float(coords[idx]), snap_distance=float(abs(coords[idx] - at)))
    if along == "axis1":
        return FidelityGrid(grid.axis1, grid.label1, grid.values[:, idx].copy(), meta=meta)
    return FidelityGrid(grid.axis2, grid.label2, grid.values[idx, :].copy(), meta=meta)


def _point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def monte_carlo_infidelity(seq: CompositeSequence, rng: ScanRange, sigma: float = 0.10,
                           n_trials: int = 100, seed: int = 0) -> MonteCarloCurve:
    """Mean infidelity with independent Gaussian errors on every pulse length.

    At grid point ``epsilon`` each trial uses per-pulse factors
    ``max(1 + g_n, 0.01)``, ``g_n ~ N(0, sigma)``, on top of the common
    scale ``1 + epsilon``.  Grid point ``i`` draws from its own Philox
    stream keyed by ``(seed, i)``.
    """
    if not (math.isfinite(sigma) and sigma >= 0):
        raise InvalidArgumentError(f"sigma must be finite and >= 0, got {sigma!r}")
    if int(n_trials) != n_trials or n_trials < 1:
        raise InvalidArgumentError(f"n_trials must be an integer >= 1, got {n_trials!r}")
    if rng.lo <= -1:
        raise InvalidArgumentError("area error must stay above -1")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise InvalidArgumentError("seed must fit in an unsigned 64-bit integer")
    n_trials = int(n_trials)
    eps = rng.values
    n = len(seq)

    factors = np.empty((eps.size, n_trials, n))
    for i in range(eps.size):
        g = _point_rng(seed, i).normal(0.0, sigma, size=(n_trials, n))
        factors[i] = np.maximum(1.0 + g, MIN_PULSE_FACTOR)
    f = fidelity_batch(seq, area_scale=np.repeat(1.0 + eps, n_trials),
                       per_pulse_scales=factors.reshape(-1, n))
    mean = (1.0 - f.reshape(eps.size, n_trials)).mean(axis=1)
    return MonteCarloCurve(rng, mean, float(sigma), n_trials, seed)


def threshold_width(epsilon, infidelity, threshold: float = 1e-4) -> ThresholdWidth:
    """Largest ``w`` with ``infidelity <= threshold`` for all samples ``|epsilon| <= w``.

    The crossing on each side is located by linear interpolation between the
    last sample below and the first sample above the threshold; the smaller
    side wins.
    """
    eps = np.asarray(epsilon, dtype=float)
    inf = np.asarray(infidelity, dtype=float)
    if eps.shape != inf.shape or eps.ndim != 1:
        raise InvalidArgumentError("epsilon and infidelity must be 1-D arrays of equal length")
    if not threshold > 0:
        raise InvalidArgumentError("threshold must be > 0")
    if np.any(np.diff(eps) <= 0):
        raise InvalidArgumentError("epsilon must be strictly increasing")
    i0 = int(np.argmin(np.abs(eps)))
    if abs(eps[i0]) > 1e-12 * max(1.0, float(np.max(np.abs(eps)))):
        raise InvalidArgumentError("grid must contain epsilon = 0")
    if inf[i0] > threshold:
        return ThresholdWidth(0.0, valid=False)

    def side(step):
        i = i0
        while 0 <= i + step < eps.size:
            j = i + step
            if inf[j] > threshold:
                frac = (threshold - inf[i]) / (inf[j] - inf[i])
                return abs(eps[i] + frac * (eps[j] - eps[i])), False
            i = j
        return abs(eps[i]), True

    right, sat_r = side(1)
    left, sat_l = side(-1)
    if left < right:
        return ThresholdWidth(float(left), saturated=sat_l)
    return ThresholdWidth(float(right), saturated=sat_r)
