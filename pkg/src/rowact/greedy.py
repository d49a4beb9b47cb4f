"""Per-row weighted losses and the greedy row-selection rules.

The loss of row ``i`` at residual ``r`` is ``|r_i|^2 / ||A_i||^2``. The
maximal weighted residual rule picks its argmax; the relaxed rule keeps every
row whose loss clears a convex combination (weight ``theta``) of the maximum
and the row-norm-weighted average loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import RowMatrix


class SolvedSystemError(ValueError):
    """Raised when a selection is requested for an identically zero residual."""


@dataclass(frozen=True)
class LossVector:
    psi: np.ndarray
    max_idx: int
    max_val: float
    weighted_avg: float

    @property
    def support(self) -> np.ndarray:
        """Rows with a nonzero loss."""
        return np.flatnonzero(self.psi != 0.0)


def row_losses(A: RowMatrix, r) -> LossVector:
    r = np.asarray(r)
    if r.shape != (A.m,):
        raise ValueError(f"residual has shape {r.shape}, expected ({A.m},)")
    sq = r.real**2 + r.imag**2 if np.iscomplexobj(r) else r * r
    psi = sq / A.row_sq_norms
    i = int(np.argmax(psi))  # first maximiser, so ties go to the smallest index
    return LossVector(psi, i, float(psi[i]), float(sq.sum() / A.frob_sq))


def greedy_set(loss: LossVector, theta: float = 0.5) -> np.ndarray:
    """Sorted indices ``{i : psi_i >= theta*max + (1-theta)*avg}``."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if loss.max_val == 0.0:
        raise SolvedSystemError("all row losses are zero; the system is already solved")
    threshold = theta * loss.max_val + (1.0 - theta) * loss.weighted_avg
    # rounding in the average must never push the threshold past the maximum
    threshold = min(threshold, loss.max_val)
    return np.flatnonzero(loss.psi >= threshold)


def build_eta(r, U) -> np.ndarray:
    """Residual restricted to the rows in ``U`` (zero elsewhere)."""
    r = np.asarray(r)
    U = np.asarray(U, dtype=np.intp)
    if U.size == 0:
        raise ValueError("build_eta needs a nonempty index set")
    eta = np.zeros_like(r)
    eta[U] = r[U]
    return eta
