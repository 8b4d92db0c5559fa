"""Complete-population-transfer conditions for sequences of pi pulses.

At unit area every pulse is ``-i (rabi/Omega_g) [[-x, 1], [1, x]]`` with
``x = delta/rabi``, so the diagonal element of the product is a polynomial
in the ratios.  Expanding it gives, for a subset ``i_1 < ... < i_k`` of
1-based pulse indices, the term

    (-1)**(i_1 + ... + i_k + ceil(k/2)) * x_{i_1} ... x_{i_k}

where only even ``k`` survive for even ``N`` and only odd ``k`` for odd
``N``.  The exponent pattern was pinned against the matrix product
(``cpt_residual_oracle``); it agrees with the order-2 and order-1/3 signs as
commonly printed.  Exactly:

    u11 = prod_n(-i rabi_n / Omega_g,n) * s * cpt_sum(x),   s = +1 (N even), -1 (N odd).
"""
import math
from itertools import combinations

import numpy as np

from .dynamics import CompositeSequence, compose_sequence
from .errors import InvalidArgumentError


def _as_ratios(x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise InvalidArgumentError("need at least one detuning ratio")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("detuning ratios must be finite")
    return x


def term_sign(indices) -> int:
    """Sign of the product over 1-based ``indices`` in the CPT sums."""
    k = len(indices)
    return -1 if (sum(indices) + (k + 1) // 2) % 2 else 1


def _alternating_sum(x, orders):
    n = len(x)
    total = 0.0
    for k in orders:
        for idx in combinations(range(1, n + 1), k):
            prod = 1.0
            for i in idx:
                prod *= x[i - 1]
            total += term_sign(idx) * prod
    return total


def cpt_sum_even(x) -> float:
    """Alternating even-order sum for an even number of pulses; zero means full transfer."""
    x = _as_ratios(x)
    if len(x) % 2:
        raise InvalidArgumentError(f"cpt_sum_even needs an even number of pulses, got {len(x)}")
    return _alternating_sum(x, range(0, len(x) + 1, 2))


def cpt_sum_odd(x) -> float:
    """Alternating odd-order sum for an odd number of pulses; zero means full transfer."""
    x = _as_ratios(x)
    if len(x) % 2 == 0:
        raise InvalidArgumentError(f"cpt_sum_odd needs an odd number of pulses, got {len(x)}")
    return _alternating_sum(x, range(1, len(x) + 1, 2))


def cpt_sum(x) -> float:
    x = _as_ratios(x)
    return cpt_sum_even(x) if len(x) % 2 == 0 else cpt_sum_odd(x)


def cpt_residual_oracle(seq: CompositeSequence) -> float:
    """``|u11|`` of the composite propagator at nominal areas (0 iff full transfer)."""
    areas = seq.nominal_area
    if not np.allclose(areas, math.pi, rtol=0, atol=1e-12):
        raise InvalidArgumentError("cpt_residual_oracle needs pi pulses")
    return abs(compose_sequence(seq).u11)
