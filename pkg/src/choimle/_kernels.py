"""Hot numeric kernels for the likelihood objective.

The simplex search evaluates the likelihood 1e4-1e5 times per fit, each
evaluation needing the per-record probabilities ||C q_l||^2 over all K
records. That accumulation is numba-compiled when available; set
CHOIMLE_NO_NUMBA=1 to force the pure-numpy path (same results up to
summation rounding).

Kernels work on planar float arrays: the factor matrix as (cr, ci) of shape
(n, n) and the record vectors as (qr, qi) of shape (n, K), i.e. transposed so
the record axis is contiguous. ``planar_c`` / ``planar_q`` convert from the
complex layouts used elsewhere.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("CHOIMLE_NO_NUMBA", "").strip() in ("", "0"):
    try:
        import numba
    except ImportError:
        numba = None
else:
    numba = None

NUMBA_ENABLED = numba is not None


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def planar_c(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a complex matrix into contiguous real/imag planes."""
    return np.ascontiguousarray(c.real), np.ascontiguousarray(c.imag)


def planar_q(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a (K, n) complex record array into transposed (n, K) planes."""
    return np.ascontiguousarray(q.real.T), np.ascontiguousarray(q.imag.T)


def _probs_tri_py(cr, ci, qr, qi):
    # Upper-triangular factor: the j loop starts at the diagonal.
    n, kk = qr.shape
    p = np.zeros(kk)
    zr = np.empty(kk)
    zi = np.empty(kk)
    for i in range(n):
        for l in range(kk):
            zr[l] = 0.0
            zi[l] = 0.0
        for j in range(i, n):
            a = cr[i, j]
            b = ci[i, j]
            for l in range(kk):
                x = qr[j, l]
                y = qi[j, l]
                zr[l] += a * x - b * y
                zi[l] += a * y + b * x
        for l in range(kk):
            p[l] += zr[l] * zr[l] + zi[l] * zi[l]
    return p


def _probs_full_py(cr, ci, qr, qi):
    n, kk = qr.shape
    p = np.zeros(kk)
    zr = np.empty(kk)
    zi = np.empty(kk)
    for i in range(n):
        for l in range(kk):
            zr[l] = 0.0
            zi[l] = 0.0
        for j in range(n):
            a = cr[i, j]
            b = ci[i, j]
            for l in range(kk):
                x = qr[j, l]
                y = qi[j, l]
                zr[l] += a * x - b * y
                zi[l] += a * y + b * x
        for l in range(kk):
            p[l] += zr[l] * zr[l] + zi[l] * zi[l]
    return p


def _probs_numpy(cr, ci, qr, qi):
    vr = cr @ qr - ci @ qi
    vi = cr @ qi + ci @ qr
    return (vr * vr + vi * vi).sum(axis=0)


if NUMBA_ENABLED:
    _probs_tri_numba = numba.njit(cache=True, fastmath=True)(_probs_tri_py)
    _probs_full_numba = numba.njit(cache=True, fastmath=True)(_probs_full_py)

    def probs_tri(cr, ci, qr, qi):
        """||C q_l||^2 per record for an upper-triangular factor."""
        return _probs_tri_numba(cr, ci, qr, qi)

    def probs_full(cr, ci, qr, qi):
        """||C q_l||^2 per record for an arbitrary factor matrix."""
        return _probs_full_numba(cr, ci, qr, qi)

else:
    probs_tri = _probs_numpy
    probs_full = _probs_numpy
