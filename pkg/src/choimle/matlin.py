"""Dense complex linear algebra for small (dim <= 8) operator spaces.

Everything here works on plain complex ndarrays in row-major layout with
lexicographic tensor-product indexing: the Kronecker index of subsystem
indices (i, j) is i * dim_j + j.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-10


def as_cmat(m) -> np.ndarray:
    """Coerce to a 2-D complex128 array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    return a


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.abs(m - m.conj().T).max() <= tol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, row index (i_a, i_b) -> i_a * b.rows + i_b."""
    return np.kron(as_cmat(a), as_cmat(b))


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` are the subsystem dimensions in tensor order; their product must
    equal the matrix dimension. The kept subsystems retain their relative
    order.
    """
    m = as_cmat(m)
    dims = list(dims)
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    # Contract traced subsystems highest-axis-first so remaining axis
    # numbers stay valid (np.trace drops both contracted axes).
    t = m.reshape(dims + dims)
    traced = [ax for ax in range(len(dims)) if ax not in keep]
    for ax in sorted(traced, reverse=True):
        half = t.ndim // 2
        t = np.trace(t, axis1=ax, axis2=ax + half)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def cholesky_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Upper-triangular C with C^dag C = m for Hermitian PSD m.

    Pivots below ``tol`` are clamped to zero together with their row of C, so
    semidefinite inputs (the rank-2 analytic truth matrix) factor without
    pivoting. A pivot below ``-tol`` means the input is not PSD.
    """
    m = as_cmat(m)
    n = m.shape[0]
    if m.shape[1] != n:
        raise ValueError("cholesky_psd requires a square matrix")
    if not is_hermitian(m, tol):
        raise ValueError("cholesky_psd requires a Hermitian matrix")

    c = np.zeros((n, n), dtype=complex)
    clamped = False
    for i in range(n):
        pivot = m[i, i].real - np.sum(np.abs(c[:i, i]) ** 2)
        if pivot < -tol:
            raise ValueError(f"matrix is not PSD: pivot {pivot:.3e} at index {i}")
        if pivot <= tol:
            clamped = True
            continue  # row of C stays zero
        c[i, i] = np.sqrt(pivot)
        if i + 1 < n:
            c[i, i + 1:] = (m[i, i + 1:] - c[:i, i].conj() @ c[:i, i + 1:]) / c[i, i]
    if clamped:
        # Clamping is exact only for PSD inputs; an indefinite matrix with a
        # zero pivot (e.g. [[0, 1], [1, 0]]) would otherwise factor silently.
        # PSD inputs bound the dropped entries by sqrt(pivot * diagonal).
        scale = max(1.0, np.abs(m).max())
        if np.abs(c.conj().T @ c - m).max() > n * np.sqrt(tol * scale):
            raise ValueError("matrix is not PSD: zero pivot with nonzero residual")
    return c


def hermitian_eig(m: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending, real) and orthonormal eigenvector columns."""
    m = as_cmat(m)
    if not is_hermitian(m, tol):
        raise ValueError("hermitian_eig requires a Hermitian matrix")
    w, v = np.linalg.eigh(m)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def frob_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of a - b."""
    a, b = as_cmat(a), as_cmat(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
