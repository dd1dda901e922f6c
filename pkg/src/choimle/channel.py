"""Choi-matrix machinery for qubit-input channels, plus the analytic cloner.

Subsystem order is input-first everywhere: a channel from an N-dimensional
input to an M-dimensional output is represented by an (N*M) x (N*M) operator
on input (x) output, so for the 1-to-2 cloner the 8-dimensional space is
A (x) B (x) C with A the input and B, C the clones, basis ordered
lexicographically (index = 4a + 2b + c).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .matlin import (
    DEFAULT_TOL,
    as_cmat,
    hermitian_eig,
    is_hermitian,
    kron,
    partial_trace,
)

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = [SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z]


def pauli_basis() -> list[np.ndarray]:
    """Orthonormal operator basis sigma_i / sqrt(2), Tr[V_i^dag V_j] = delta_ij."""
    return [p / np.sqrt(2.0) for p in PAULIS]


@dataclass(frozen=True)
class ChoiMatrix:
    """Positive operator on input (x) output representing a CP map.

    dims are stored explicitly so the 2 -> 4 case stays unambiguous.
    """

    dim_in: int
    dim_out: int
    mat: np.ndarray

    def __post_init__(self):
        m = as_cmat(self.mat)
        d = self.dim_in * self.dim_out
        if m.shape != (d, d):
            raise ValueError(f"Choi matrix shape {m.shape} != ({d}, {d})")
        object.__setattr__(self, "mat", m)

    def to_json_dict(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "mat": [[[z.real, z.imag] for z in row] for row in self.mat],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChoiMatrix":
        try:
            dim_in, dim_out = int(d["dim_in"]), int(d["dim_out"])
            mat = np.array(
                [[complex(re, im) for re, im in row] for row in d["mat"]], dtype=complex
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed Choi matrix JSON: {exc}") from exc
        return cls(dim_in, dim_out, mat)

    @classmethod
    def from_json(cls, s: str) -> "ChoiMatrix":
        return cls.from_json_dict(json.loads(s))


def max_entangled(n: int) -> np.ndarray:
    """Unnormalized maximally entangled column vector sum_k |k>|k>, norm^2 = n."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    v = np.zeros((n * n, 1), dtype=complex)
    for k in range(n):
        v[k * n + k, 0] = 1.0
    return v


def symmetric_projector() -> np.ndarray:
    """Projector onto the symmetric two-qubit subspace (|00>, |01>+|10>, |11>)."""
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
        dtype=complex,
    )


def _check_density(rho: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    rho = as_cmat(rho)
    if rho.shape != (2, 2):
        raise ValueError("expected a 2x2 density matrix")
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix must be PSD")
    return rho


def clone_apply(rho: np.ndarray) -> np.ndarray:
    """Optimal symmetric 1-to-2 cloner: (2/3) s2 (rho (x) 1) s2."""
    rho = _check_density(rho)
    s2 = symmetric_projector()
    return (2.0 / 3.0) * (s2 @ kron(rho, SIGMA_0) @ s2)


def _eval_linear(channel_action: Callable[[np.ndarray], np.ndarray], h: np.ndarray, m: int) -> np.ndarray:
    """Evaluate a linear channel action on an arbitrary matrix.

    Channel actions may validate their arguments as density matrices, so the
    input is decomposed into pure states (Hermitian/skew split, then spectral
    decomposition) and the action extended by linearity.
    """
    h = as_cmat(h)
    out = np.zeros((m, m), dtype=complex)
    for part, scale in (((h + h.conj().T) / 2, 1.0), ((h - h.conj().T) / 2j, 1j)):
        w, v = np.linalg.eigh(part)
        for lam, vec in zip(w, v.T):
            if lam == 0.0:
                continue
            block = as_cmat(channel_action(np.outer(vec, vec.conj())))
            if block.shape != (m, m):
                raise ValueError(
                    f"channel action returned shape {block.shape}, expected ({m}, {m})"
                )
            out += scale * lam * block
    return out


def choi_from_action(
    channel_action: Callable[[np.ndarray], np.ndarray], n: int, m: int
) -> ChoiMatrix:
    """Choi matrix of a linear channel action, built on matrix units.

    Acts with the channel on the second half of the unnormalized maximally
    entangled state: S = sum_{jk} |j><k| (x) E(|j><k|).
    """
    d = n * m
    s = np.zeros((d, d), dtype=complex)
    for j in range(n):
        for k in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[j, k] = 1.0
            s[j * m:(j + 1) * m, k * m:(k + 1) * m] = _eval_linear(channel_action, unit, m)
    return ChoiMatrix(n, m, s)


def choi_from_action_pauli(
    channel_action: Callable[[np.ndarray], np.ndarray], m: int
) -> ChoiMatrix:
    """Qubit-input Choi matrix via the Pauli operator basis: sum_i V_i^* (x) E(V_i)."""
    s = np.zeros((2 * m, 2 * m), dtype=complex)
    for v in pauli_basis():
        s += kron(v.conj(), _eval_linear(channel_action, v, m))
    return ChoiMatrix(2, m, s)


# Eq.-level ground truth: the cloner's Choi matrix in sixths. Kept as integer
# numerators so exactness checks can run in integer arithmetic.
CLONE_CHOI_NUMERATORS = np.array(
    [
        [4, 0, 0, 0, 0, 2, 2, 0],
        [0, 1, 1, 0, 0, 0, 0, 2],
        [0, 1, 1, 0, 0, 0, 0, 2],
        [0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0],
        [2, 0, 0, 0, 0, 1, 1, 0],
        [2, 0, 0, 0, 0, 1, 1, 0],
        [0, 2, 2, 0, 0, 0, 0, 4],
    ],
    dtype=np.int64,
)
CLONE_CHOI_DENOMINATOR = 6


def clone_choi() -> ChoiMatrix:
    """Hard-coded ground-truth Choi matrix of the cloner (literal sixths)."""
    return ChoiMatrix(2, 4, CLONE_CHOI_NUMERATORS.astype(complex) / CLONE_CHOI_DENOMINATOR)


def apply_choi(s: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Channel action from the Choi matrix: E(rho) = Tr_in[(rho^T (x) 1) S]."""
    rho = as_cmat(rho)
    if rho.shape != (s.dim_in, s.dim_in):
        raise ValueError(f"input shape {rho.shape} != ({s.dim_in}, {s.dim_in})")
    big = kron(rho.T, np.eye(s.dim_out, dtype=complex)) @ s.mat
    return partial_trace(big, (s.dim_in, s.dim_out), keep={1})


def kraus_from_choi(s: ChoiMatrix, tol: float = 1e-8) -> list[np.ndarray]:
    """Kraus operators from the Choi spectrum, one per eigenvalue above tol.

    Eigenvector component (n, j) of the input (x) output space becomes matrix
    element (j, n) of the Kraus operator, scaled by sqrt(eigenvalue).
    """
    w, v = hermitian_eig(s.mat)
    if w[-1] < -tol:
        raise ValueError(f"Choi matrix is not PSD: min eigenvalue {w[-1]:.3e}")
    ops = []
    for k in range(len(w)):
        if w[k] > tol:
            a = np.sqrt(w[k]) * v[:, k].reshape(s.dim_in, s.dim_out).T
            ops.append(a)
    return ops


def tp_residual(s: ChoiMatrix) -> float:
    """Max elementwise deviation of Tr_out[S] from the input-space identity."""
    reduced = partial_trace(s.mat, (s.dim_in, s.dim_out), keep={0})
    return float(np.abs(reduced - np.eye(s.dim_in)).max())


def choi_is_valid(s: ChoiMatrix, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian and PSD within tol (trace preservation reported separately)."""
    if not is_hermitian(s.mat, tol):
        return False
    return bool(np.linalg.eigvalsh(s.mat).min() >= -tol)


__all__ = [
    "PAULIS",
    "SIGMA_0",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "ChoiMatrix",
    "CLONE_CHOI_DENOMINATOR",
    "CLONE_CHOI_NUMERATORS",
    "apply_choi",
    "choi_from_action",
    "choi_from_action_pauli",
    "choi_is_valid",
    "clone_apply",
    "clone_choi",
    "kraus_from_choi",
    "max_entangled",
    "pauli_basis",
    "symmetric_projector",
    "tp_residual",
]
