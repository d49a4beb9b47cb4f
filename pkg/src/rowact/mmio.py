"""Matrix Market reading and writing for matrices and vectors.

Thin wrappers over :mod:`scipy.io` that fix the output precision at 17
significant digits and turn parse failures into :class:`MatrixMarketError`.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.io
from scipy import sparse

from .matrix import RowMatrix, as_row_matrix

PRECISION = 17


class MatrixMarketError(ValueError):
    """Malformed or inconsistent Matrix Market content."""


def _read(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return scipy.io.mmread(path)
    except (ValueError, IndexError, TypeError) as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc


def read_matrix_market(path) -> RowMatrix:
    """Load a matrix; coordinate files stay sparse, array files become dense."""
    data = _read(path)
    if sparse.issparse(data):
        return RowMatrix(sparse.csr_array(data))
    return RowMatrix(np.asarray(data))


def write_matrix_market(path, A, *, dense: bool | None = None) -> None:
    """Write ``A`` in array format when dense, coordinate format when sparse."""
    A = as_row_matrix(A)
    as_dense = (not A.is_sparse) if dense is None else dense
    payload = A.toarray() if as_dense else sparse.coo_array(A.data)
    _write(path, payload)


def read_vector(path) -> np.ndarray:
    data = _read(path)
    if sparse.issparse(data):
        data = data.toarray()
    data = np.asarray(data)
    if data.ndim != 2 or 1 not in data.shape:
        raise MatrixMarketError(f"{path}: expected a single row or column, got shape {data.shape}")
    return data.reshape(-1)


def write_vector(path, v) -> None:
    """Write ``v`` as an n-by-1 Matrix Market array."""
    _write(path, np.asarray(v).reshape(-1, 1))


def _write(path, payload) -> None:
    # an open handle stops scipy from appending ".mtx" to the name
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, payload, precision=PRECISION)
