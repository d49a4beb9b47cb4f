"""Seeded test matrices and small dense linear-algebra kernels.

Covers the Gaussian and ``U D V^T`` generators used in the experiments, the
minimum-norm least-squares reference solution and the extreme singular
values that enter the convergence bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .matrix import RowMatrix, as_row_matrix


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream; the same seed always yields the same draws."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


class MatrixKind(str, Enum):
    GAUSSIAN = "gaussian"
    UDV = "udv"
    IDENTITY = "identity"


@dataclass(frozen=True)
class SyntheticSpec:
    """Description of a synthetic coefficient matrix.

    ``r`` and ``kappa`` are only meaningful for ``MatrixKind.UDV``.
    """

    kind: MatrixKind
    m: int
    n: int
    r: int | None = None
    kappa: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", MatrixKind(self.kind))
        if self.m < 1 or self.n < 1:
            raise ValueError(f"matrix dimensions must be positive, got {self.m}x{self.n}")
        if self.kind is MatrixKind.UDV:
            if self.r is None or self.kappa is None:
                raise ValueError("UDV matrices need both a rank r and a bound kappa")
            if not 1 <= self.r <= min(self.m, self.n):
                raise ValueError(f"rank r={self.r} must lie in [1, min(m, n)={min(self.m, self.n)}]")
            if not self.kappa > 1:
                raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if self.kind is MatrixKind.IDENTITY and self.m != self.n:
            raise ValueError("identity matrices must be square")


def gaussian_matrix(m: int, n: int, rng: np.random.Generator) -> RowMatrix:
    """i.i.d. standard normal entries, re-drawing any all-zero row."""
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be positive, got {m}x{n}")
    A = rng.standard_normal((m, n))
    while True:
        zero = np.flatnonzero(~A.any(axis=1))
        if zero.size == 0:
            break
        A[zero] = rng.standard_normal((zero.size, n))
    return RowMatrix(A)


def orthonormal_columns(m: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Thin Householder QR factor of an m-by-r Gaussian matrix."""
    if r > m:
        raise ValueError(f"cannot build {r} orthonormal columns in dimension {m}")
    Q, R = np.linalg.qr(rng.standard_normal((m, r)), mode="reduced")
    # fix the sign ambiguity so the factor is a deterministic function of the draw
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def udv_matrix(spec: SyntheticSpec, rng: np.random.Generator) -> RowMatrix:
    """``A = U diag(d) V^T`` with ``d`` uniform on ``(1, kappa)``."""
    if spec.kind is not MatrixKind.UDV:
        raise ValueError(f"udv_matrix needs a UDV spec, got {spec.kind.value}")
    U = orthonormal_columns(spec.m, spec.r, rng)
    V = orthonormal_columns(spec.n, spec.r, rng)
    d = 1.0 + (spec.kappa - 1.0) * rng.random(spec.r)
    return RowMatrix((U * d) @ V.T)


def generate(spec: SyntheticSpec) -> RowMatrix:
    rng = make_rng(spec.seed)
    if spec.kind is MatrixKind.GAUSSIAN:
        return gaussian_matrix(spec.m, spec.n, rng)
    if spec.kind is MatrixKind.UDV:
        return udv_matrix(spec, rng)
    return RowMatrix(np.eye(spec.m))


def default_rank_tol(m: int, n: int) -> float:
    return max(m, n) * np.finfo(float).eps


def _dense(A) -> np.ndarray:
    if isinstance(A, RowMatrix):
        return A.toarray()
    return np.asarray(A)


def svd_extremes(A, rank_tol: float | None = None) -> tuple[float, float, int]:
    """Largest and smallest nonzero singular values plus the numerical rank.

    A singular value counts as nonzero when it exceeds ``rank_tol * sigma_max``.
    """
    M = _dense(A)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("svd_extremes needs a nonzero matrix")
    tol = default_rank_tol(*M.shape) if rank_tol is None else rank_tol
    rank = int(np.count_nonzero(s > tol * s[0]))
    return float(s[0]), float(s[rank - 1]), rank


def min_norm_solution(A, b, rank_tol: float | None = None) -> np.ndarray:
    """``A^+ b`` through a truncated SVD pseudoinverse."""
    M = _dense(A)
    b = np.asarray(b)
    if b.shape != (M.shape[0],):
        raise ValueError(f"b has shape {b.shape}, expected ({M.shape[0]},)")
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    tol = default_rank_tol(*M.shape) if rank_tol is None else rank_tol
    k = int(np.count_nonzero(s > tol * s[0])) if s.size and s[0] > 0 else 0
    coef = (U[:, :k].conj().T @ b) / s[:k]
    return Vh[:k].conj().T @ coef


def consistent_system(A, seed_vector=None) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``b = A x*`` with ``x* = A^+ e`` and ``e`` the all-ones vector."""
    A = as_row_matrix(A)
    e = np.ones(A.m) if seed_vector is None else np.asarray(seed_vector)
    x_star = min_norm_solution(A, e)
    return A.matvec(x_star), x_star
