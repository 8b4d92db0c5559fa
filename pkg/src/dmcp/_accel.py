"""Hot kernels: batched products of two-level propagators.

Every kernel exists twice, a numba ``@njit`` version and a vectorised numpy
version with the same signature.  The module-level names (``compose_batch``)
point at the numba path unless numba is missing or ``DMCP_DISABLE_NUMBA`` is
set to a truthy value before import.  ``DMCP_NUM_THREADS`` caps numba's
thread pool.
"""
import logging
import os

import numpy as np

log = logging.getLogger(__name__)

_TRUTHY = {"1", "true", "yes", "on"}


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in _TRUTHY


def compose_batch_numpy(omega, delta, duration):
    """Compose ``N`` constant pulses for each of ``M`` parameter rows.

    Parameters
    ----------
    omega, delta, duration : ndarray, shape (M, N)
        Coupling, detuning and duration of pulse ``n`` in row ``m``.
        Pulse 0 acts first.

    Returns
    -------
    ndarray, shape (M, 4), complex
        Entries ``u11, u12, u21, u22`` of ``U_{N-1} ... U_0`` per row.
    """
    omega = np.asarray(omega, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    duration = np.asarray(duration, dtype=np.float64)
    m, n = omega.shape
    g = np.hypot(omega, delta)
    theta = 0.5 * g * duration
    c = np.cos(theta)
    # sin(theta)/g without dividing by a vanishing g
    sg = 0.5 * duration * np.sinc(theta / np.pi)
    p11 = c + 1j * delta * sg
    p12 = -1j * omega * sg
    p22 = c - 1j * delta * sg

    a11 = np.ones(m, dtype=np.complex128)
    a12 = np.zeros(m, dtype=np.complex128)
    a21 = np.zeros(m, dtype=np.complex128)
    a22 = np.ones(m, dtype=np.complex128)
    for k in range(n):
        q11, q12, q22 = p11[:, k], p12[:, k], p22[:, k]
        a11, a12, a21, a22 = (
            q11 * a11 + q12 * a21,
            q11 * a12 + q12 * a22,
            q12 * a11 + q22 * a21,
            q12 * a12 + q22 * a22,
        )
    return np.stack([a11, a12, a21, a22], axis=1)


try:
    import warnings

    import numba
    from numba import njit, prange
    from numba.core.errors import NumbaWarning

    # an old system TBB only means numba falls back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @njit(cache=True)
    def _sinc_half(theta, half_t):
        if abs(theta) < 1e-4:
            t2 = theta * theta
            return half_t * (1.0 - t2 / 6.0 + t2 * t2 / 120.0)
        return half_t * np.sin(theta) / theta

    @njit(cache=True, parallel=True)
    def compose_batch_numba(omega, delta, duration):
        m, n = omega.shape
        out = np.empty((m, 4), dtype=np.complex128)
        for i in prange(m):
            a11 = 1.0 + 0.0j
            a12 = 0.0 + 0.0j
            a21 = 0.0 + 0.0j
            a22 = 1.0 + 0.0j
            for k in range(n):
                om = omega[i, k]
                de = delta[i, k]
                t = duration[i, k]
                theta = 0.5 * np.sqrt(om * om + de * de) * t
                c = np.cos(theta)
                sg = _sinc_half(theta, 0.5 * t)
                q11 = c + 1j * de * sg
                q12 = -1j * om * sg
                q22 = c - 1j * de * sg
                b11 = q11 * a11 + q12 * a21
                b12 = q11 * a12 + q12 * a22
                b21 = q12 * a11 + q22 * a21
                b22 = q12 * a12 + q22 * a22
                a11, a12, a21, a22 = b11, b12, b21, b22
            out[i, 0] = a11
            out[i, 1] = a12
            out[i, 2] = a21
            out[i, 3] = a22
        return out

    _threads = os.environ.get("DMCP_NUM_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))
else:
    compose_batch_numba = None


USE_NUMBA = HAVE_NUMBA and not _env_flag("DMCP_DISABLE_NUMBA")


def compose_batch(omega, delta, duration):
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    duration = np.ascontiguousarray(duration, dtype=np.float64)
    if USE_NUMBA:
        return compose_batch_numba(omega, delta, duration)
    return compose_batch_numpy(omega, delta, duration)


compose_batch.__doc__ = compose_batch_numpy.__doc__


def backend():
    """Name of the active kernel backend (``"numba"`` or ``"numpy"``)."""
    return "numba" if USE_NUMBA else "numpy"
