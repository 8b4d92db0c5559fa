"""Design of detuning-modulated composite pi-pulse sequences.

First order: sign-alternating detunings ``(+d, -d, +d, ...)`` with ``d`` the
largest real root of ``sum_s (-1)**s C(N, 2s) d**(N-2s)`` (coupling 1).
This zeroes the transfer error and the second area derivative.

Second order: odd ``N``, detunings anti-symmetric about a resonant middle
pulse and alternating in sign within each half, ``(+d, -d, ..., 0, ...,
+d, -d)``.  Transfer and the second derivative vanish for every ``d``; ``d``
is picked as the root of the fourth area derivative with the smallest sixth
derivative.
"""
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy.optimize import brentq

from . import _accel
from .cpt import cpt_residual_oracle
from .dynamics import CompositeSequence
from .errors import InvalidArgumentError, NumericError

log = logging.getLogger(__name__)

FIRST_ORDER_TABULATED = (2, 3, 4, 5)
SECOND_ORDER_TABULATED = (3, 5, 7, 9)

# Richardson tableau for the central differences in area_derivative
RICHARDSON_LEVELS = 6
STEP_RATIO = 1.3
BASE_STEP = 0.4
STEP_BANDWIDTH = 2.0

SECOND_ORDER_GRID_STEP = 0.05


class Order(enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class DesignSpec:
    n_pulses: int
    order: Order = Order.FIRST
    coupling: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "order", Order(self.order))
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 2:
            raise InvalidArgumentError(f"n_pulses must be an integer >= 2, got {self.n_pulses!r}")
        if self.order is Order.SECOND and self.n_pulses % 2 == 0:
            raise InvalidArgumentError("second-order sequences need an odd number of pulses")
        if not (math.isfinite(self.coupling) and self.coupling > 0):
            raise InvalidArgumentError(f"coupling must be finite and > 0, got {self.coupling!r}")


@dataclass
class DesignResult:
    sequence: CompositeSequence
    delta_over_omega: float
    diagnostics: Dict[int, float]
    order: Order
    candidates: List[float] = field(default_factory=list)
    selection_consistent: bool = True
    cpt_residual: float = 0.0

    @property
    def n_pulses(self) -> int:
        return len(self.sequence)

    @property
    def table_ref(self) -> str:
        table = FIRST_ORDER_TABULATED if self.order is Order.FIRST else SECOND_ORDER_TABULATED
        name = f"{self.order.value}-order"
        if self.n_pulses in table:
            return f"{name} table N={self.n_pulses}"
        return f"{name} N={self.n_pulses} (not tabulated)"


def first_order_pattern(n: int) -> np.ndarray:
    return np.array([1.0 if i % 2 == 0 else -1.0 for i in range(n)])


def second_order_pattern(n: int) -> np.ndarray:
    if n % 2 == 0 or n < 3:
        raise InvalidArgumentError("second-order pattern needs odd n >= 3")
    half = (n - 1) // 2
    first = first_order_pattern(half)
    return np.concatenate([first, [0.0], -first[::-1]])


def first_order_coefficients(n: int) -> np.ndarray:
    """Coefficients (highest degree first) of the sign-alternating transfer polynomial in ``delta``."""
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"N must be an integer >= 2, got {n!r}")
    n = int(n)
    coeffs = np.zeros(n + 1)
    for s in range(n // 2 + 1):
        coeffs[2 * s] = (-1) ** s * math.comb(n, 2 * s)
    return coeffs


def real_roots(coeffs, imag_tol=1e-7, newton_steps=8) -> np.ndarray:
    """All real roots of a polynomial, via companion-matrix eigenvalues and Newton polishing."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if coeffs.size < 2:
        return np.empty(0)
    monic = coeffs / coeffs[0]
    deg = monic.size - 1
    companion = np.zeros((deg, deg))
    companion[0, :] = -monic[1:]
    companion[1:, :-1] = np.eye(deg - 1)
    eig = np.linalg.eigvals(companion)
    scale = max(1.0, float(np.max(np.abs(eig))))
    real = np.sort(eig[np.abs(eig.imag) <= imag_tol * scale].real)

    deriv = np.polyder(coeffs)
    polished = []
    for r in real:
        for _ in range(newton_steps):
            d = np.polyval(deriv, r)
            if d == 0:
                break
            step = np.polyval(coeffs, r) / d
            r -= step
            if abs(step) <= 1e-16 * max(1.0, abs(r)):
                break
        polished.append(r)
    return np.array(polished)


def _validate_order(k):
    if int(k) != k or not 1 <= k <= 6:
        raise InvalidArgumentError(f"derivative order must be in 1..6, got {k!r}")
    return int(k)


def _step_for(n_pulses):
    # the transfer profile is a trigonometric polynomial of degree N in the area;
    # keep N*h bounded so the Richardson tableau converges
    return min(BASE_STEP, STEP_BANDWIDTH / max(n_pulses, 1))


def _derivative_batch(omega, delta, t_unit, k, at, h):
    """k-th derivative in the common area for ``M`` sequences at once.

    ``t_unit`` holds the durations that give each pulse unit area scale
    (area ``pi``); area ``A`` means durations ``t_unit * A / pi``.
    """
    m, n = omega.shape
    offsets = np.array([k / 2.0 - j for j in range(k + 1)])
    weights = np.array([(-1) ** j * math.comb(k, j) for j in range(k + 1)], dtype=float)
    steps = h / STEP_RATIO ** np.arange(RICHARDSON_LEVELS)
    areas = at + steps[:, None] * offsets[None, :]  # (levels, k+1)
    scales = (areas / math.pi).ravel()
    p = scales.size
    u = _accel.compose_batch(
        np.repeat(omega, p, axis=0),
        np.repeat(delta, p, axis=0),
        np.repeat(t_unit, p, axis=0) * np.tile(scales, m)[:, None],
    )
    f = (np.abs(u[:, 1]) ** 2).reshape(m, RICHARDSON_LEVELS, k + 1)
    table = (f @ weights) / steps[None, :] ** k  # (m, levels)
    for level in range(1, RICHARDSON_LEVELS):
        factor = STEP_RATIO ** (2 * level)
        table = (factor * table[:, 1:] - table[:, :-1]) / (factor - 1.0)
    return table[:, 0]


def _unit_durations(seq):
    return seq.durations / seq.nominal_area * math.pi


def area_derivative(seq: CompositeSequence, k: int, at: float = math.pi) -> float:
    """k-th derivative of the transfer probability with respect to the common pulse area.

    Central differences on a geometric ladder of steps, combined by
    Richardson extrapolation.  Absolute accuracy is better than 1e-8 for
    k <= 4 and 1e-5 for k = 5, 6 on designed sequences up to N ~ 11.
    """
    k = _validate_order(k)
    if not math.isfinite(at) or at <= 0:
        raise InvalidArgumentError(f"area must be finite and > 0, got {at!r}")
    h = _step_for(len(seq))
    if at - k / 2.0 * h <= 0:
        raise InvalidArgumentError("area too close to zero for the difference stencil")
    return float(_derivative_batch(seq.rabi[None, :], seq.detuning[None, :],
                                   _unit_durations(seq)[None, :], k, at, h)[0])


def derivative_profile(seq: CompositeSequence, orders=range(1, 7), at: float = math.pi) -> Dict[int, float]:
    return {k: area_derivative(seq, k, at) for k in orders}


def _pattern_derivative(pattern, ratios, k, coupling=1.0):
    """Derivative of order k at pi for ``pattern * ratio`` sequences, one per ratio."""
    ratios = np.atleast_1d(np.asarray(ratios, dtype=float))
    delta = coupling * ratios[:, None] * pattern[None, :]
    omega = np.full_like(delta, coupling)
    t_unit = math.pi / np.hypot(omega, delta)
    return _derivative_batch(omega, delta, t_unit, k, math.pi, _step_for(pattern.size))


def _finish(spec, pattern, x, candidates, consistent):
    seq = CompositeSequence.from_ratios(pattern * x, rabi=spec.coupling,
                                        label=f"{spec.order.value}-order N={spec.n_pulses}")
    result = DesignResult(
        sequence=seq,
        delta_over_omega=float(x),
        diagnostics=derivative_profile(seq),
        order=spec.order,
        candidates=[float(c) for c in candidates],
        selection_consistent=consistent,
        cpt_residual=cpt_residual_oracle(seq),
    )
    if result.cpt_residual >= 1e-9:
        raise NumericError("designed sequence does not reach full transfer",
                           {"cpt_residual": result.cpt_residual, "delta_over_omega": x})
    if abs(result.diagnostics[2]) >= 1e-6:
        raise NumericError("second area derivative not nullified",
                           {"d2": result.diagnostics[2], "delta_over_omega": x})
    return result


def solve_first_order(spec: DesignSpec) -> DesignResult:
    """Sign-alternating sequence from the largest root of the transfer polynomial.

    The root with the smallest fourth derivative is computed too; if it is
    not the largest root the mismatch is logged and recorded in
    ``selection_consistent`` (the largest root is still returned).
    """
    if spec.order is not Order.FIRST:
        raise InvalidArgumentError("solve_first_order needs order FIRST")
    n = spec.n_pulses
    roots = real_roots(first_order_coefficients(n))
    positive = np.sort(roots[roots > 1e-9])
    # a polished double root shows up twice
    keep = np.concatenate([[True], np.diff(positive) > 1e-9 * np.maximum(1.0, positive[1:])])
    candidates = positive[keep]
    if candidates.size == 0:
        raise NumericError("no positive real root of the transfer polynomial", {"roots": roots.tolist()})
    residual = np.abs(np.polyval(first_order_coefficients(n), candidates))
    if np.any(residual >= 1e-9 * np.maximum(1.0, candidates ** n)):
        raise NumericError("root polishing did not converge", {"residuals": residual.tolist()})

    pattern = first_order_pattern(n)
    d4 = np.abs(_pattern_derivative(pattern, candidates, 4))
    largest = float(candidates[-1])
    flattest = float(candidates[int(np.argmin(d4))])
    consistent = flattest == largest
    if not consistent:
        log.warning("N=%d: largest root %.6g differs from the root minimizing |d4F| (%.6g)",
                    n, largest, flattest)
    return _finish(spec, pattern, largest, candidates, consistent)


def solve_second_order(spec: DesignSpec) -> DesignResult:
    """Anti-symmetric sequence whose fourth area derivative vanishes at pi.

    Scans the detuning ratio on a uniform grid over ``(0, 4N]``, brackets
    every sign change of the fourth derivative, refines it with Brent's
    method and keeps the root with the smallest ``|d6F/dA6|``.
    """
    if spec.order is not Order.SECOND:
        raise InvalidArgumentError("solve_second_order needs order SECOND")
    n = spec.n_pulses
    pattern = second_order_pattern(n)
    grid = SECOND_ORDER_GRID_STEP * np.arange(1, int(round(4 * n / SECOND_ORDER_GRID_STEP)) + 1)
    d4 = _pattern_derivative(pattern, grid, 4)

    def f(x):
        return float(_pattern_derivative(pattern, x, 4)[0])

    roots = []
    for i in range(grid.size - 1):
        a, b = d4[i], d4[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-13, rtol=1e-14))
    if not roots:
        raise NumericError(f"no sign change of d4F/dA4 for N={n} in (0, {4 * n}]",
                           {"grid_step": SECOND_ORDER_GRID_STEP, "d4_min": float(d4.min()),
                            "d4_max": float(d4.max())})
    roots = np.array(sorted(roots))
    d6 = np.abs(_pattern_derivative(pattern, roots, 6))
    best = float(roots[int(np.argmin(d6))])
    return _finish(spec, pattern, best, roots, True)


def solve(spec: DesignSpec) -> DesignResult:
    if spec.order is Order.FIRST:
        return solve_first_order(spec)
    return solve_second_order(spec)
