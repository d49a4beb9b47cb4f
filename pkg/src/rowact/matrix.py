"""Immutable row-oriented matrix storage shared by every solver.

A :class:`RowMatrix` wraps either a dense row-major ``ndarray`` or a CSR
array and exposes the handful of row-access kernels the row-action methods
need: full mat-vecs, adjoint products restricted to a set of rows, and the
``A @ conj(A[i])`` Gram column used by the fast residual updates.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse


def _abs_sq(a):
    """``a * conj(a)`` as a real array, without going through ``hypot``."""
    if np.iscomplexobj(a):
        return a.real * a.real + a.imag * a.imag
    return a * a


class ZeroRowError(ValueError):
    """Raised when a coefficient matrix contains an all-zero row."""


class RowMatrix:
    """Immutable m-by-n matrix with cached squared row norms.

    Parameters
    ----------
    data : array_like or scipy sparse matrix
        Entries of the matrix. Dense input is copied into a C-contiguous
        array; sparse input is converted to CSR. Real and complex dtypes are
        both accepted.

    Raises
    ------
    ZeroRowError
        If any row is identically zero.
    """

    __slots__ = ("_data", "_sparse", "row_sq_norms", "frob_sq", "m", "n", "_complex")

    def __init__(self, data):
        if sparse.issparse(data):
            mat = sparse.csr_array(data, copy=True)
            mat.sum_duplicates()
            mat.eliminate_zeros()
            if not np.iscomplexobj(mat.data):
                mat = mat.astype(np.float64)
            mat.data.setflags(write=False)
            mat.indices.setflags(write=False)
            mat.indptr.setflags(write=False)
            counts = np.diff(mat.indptr)
            # zero-padded per-row layout so the cumulative sum runs left to right
            width = max(int(counts.max(initial=0)), 1)
            padded = np.zeros((mat.shape[0], width))
            pos = np.arange(mat.nnz) - np.repeat(mat.indptr[:-1], counts)
            padded[np.repeat(np.arange(mat.shape[0]), counts), pos] = _abs_sq(mat.data)
            norms = np.cumsum(padded, axis=1)[:, -1].copy()
            self._sparse = True
        else:
            mat = np.array(data, copy=True)
            if mat.ndim != 2:
                raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
            if not np.iscomplexobj(mat):
                mat = mat.astype(np.float64)
            mat = np.ascontiguousarray(mat)
            mat.setflags(write=False)
            norms = np.cumsum(_abs_sq(mat), axis=1)[:, -1].copy()
            self._sparse = False
        self._data = mat
        self.m, self.n = mat.shape
        if self.m == 0 or self.n == 0:
            raise ValueError("matrix must have at least one row and one column")
        zero = np.flatnonzero(norms <= 0.0)
        if zero.size:
            raise ZeroRowError(
                f"matrix has {zero.size} zero row(s); first at index {zero[0]}"
            )
        norms.setflags(write=False)
        self.row_sq_norms = norms
        self.frob_sq = float(norms.sum())
        self._complex = np.iscomplexobj(mat.data if self._sparse else mat)

    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    @property
    def is_sparse(self) -> bool:
        return self._sparse

    @property
    def is_complex(self) -> bool:
        return self._complex

    @property
    def dtype(self):
        return self._data.dtype

    @property
    def data(self):
        """The underlying read-only storage (ndarray or CSR array)."""
        return self._data

    def toarray(self) -> np.ndarray:
        if self._sparse:
            return self._data.toarray()
        return np.array(self._data)

    def __repr__(self) -> str:
        kind = "csr" if self._sparse else "dense"
        return f"RowMatrix({self.m}x{self.n}, {kind}, dtype={self.dtype})"

    # ------------------------------------------------------------------
    def row(self, i: int) -> np.ndarray:
        """Row ``i`` as a dense length-n vector."""
        if self._sparse:
            lo, hi = self._data.indptr[i], self._data.indptr[i + 1]
            out = np.zeros(self.n, dtype=self.dtype)
            out[self._data.indices[lo:hi]] = self._data.data[lo:hi]
            return out
        return self._data[i]

    def row_conj(self, i: int) -> np.ndarray:
        """``conj(A[i, :])``, i.e. the column vector ``A[i, :]^*``."""
        row = self.row(i)
        return row.conj() if self._complex else row

    def rows(self, idx) -> np.ndarray:
        """Dense copy of the row submatrix ``A[idx, :]``."""
        idx = self._check_idx(idx)
        if self._sparse:
            return self._data[idx].toarray()
        return self._data[idx]

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.n,):
            raise ValueError(f"matvec expects a vector of length {self.n}, got shape {v.shape}")
        return self._data @ v

    def rmatvec(self, w) -> np.ndarray:
        """``A^* w`` over all rows."""
        w = np.asarray(w)
        if w.shape != (self.m,):
            raise ValueError(f"rmatvec expects a vector of length {self.m}, got shape {w.shape}")
        if self._complex:
            return (self._data.T.conj() @ w) if self._sparse else self._data.conj().T @ w
        return self._data.T @ w

    def adjoint_matvec_rows(self, idx, w) -> np.ndarray:
        """``A[idx, :]^* w`` with ``w`` aligned to the order of ``idx``."""
        idx = self._check_idx(idx)
        w = np.asarray(w)
        if w.shape != (idx.size,):
            raise ValueError(f"w has shape {w.shape}, expected ({idx.size},)")
        if idx.size == 0:
            dtype = np.result_type(self.dtype, w.dtype)
            return np.zeros(self.n, dtype=dtype)
        if self._sparse:
            full = np.zeros(self.m, dtype=np.result_type(self.dtype, w.dtype))
            np.add.at(full, idx, w)
            return self.rmatvec(full)
        sub = self._data[idx]
        return w @ (sub.conj() if self._complex else sub)

    def gram_column(self, i: int) -> np.ndarray:
        """Column ``i`` of ``A A^*`` computed on the fly."""
        return self._data @ self.row_conj(i)

    def _check_idx(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.intp).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.m):
            raise IndexError(f"row index out of range for a matrix with {self.m} rows")
        return idx


def as_row_matrix(A) -> RowMatrix:
    """Return ``A`` unchanged if it is already a :class:`RowMatrix`."""
    return A if isinstance(A, RowMatrix) else RowMatrix(A)


def matvec(A, v) -> np.ndarray:
    return as_row_matrix(A).matvec(v)


def adjoint_matvec_rows(A, idx, w) -> np.ndarray:
    return as_row_matrix(A).adjoint_matvec_rows(idx, w)
