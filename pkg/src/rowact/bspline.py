"""Cubic B-spline collocation and 3-D curve fitting by row-action iteration.

Sampled points are parameterised by chord length, a clamped cubic knot
vector is placed by windowed averaging of the parameters, and the three
coordinate systems ``A p_x = q_x`` (and y, z) are iterated in lockstep with a
shared stopping rule on the combined control-net error.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .datagen import min_norm_solution
from .matrix import RowMatrix
from .solvers import SolveReport, SolverConfig, SolverRun

ORDER = 4
DEGREE = ORDER - 1


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    order: int = ORDER

    def __post_init__(self):
        t = np.asarray(self.knots, dtype=float)
        k = self.order
        if t.ndim != 1 or t.size < 2 * k:
            raise ValueError(f"need at least {2 * k} knots for order {k}")
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be nondecreasing")
        if not (np.all(t[:k] == t[0]) and np.all(t[-k:] == t[-1])):
            raise ValueError(f"knot vector must be clamped (end knots repeated {k} times)")
        if t[0] == t[-1]:
            raise ValueError("knot vector spans an empty parameter range")
        inner = t[k:-k]
        if inner.size and (inner.min() <= t[0] or inner.max() >= t[-1]):
            raise ValueError("interior knots must lie strictly inside the parameter range")
        t.setflags(write=False)
        object.__setattr__(self, "knots", t)

    @property
    def n_basis(self) -> int:
        return self.knots.size - self.order

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])


# ----------------------------------------------------------------------
# test curves


def _curve1(t):
    return np.stack([30 * np.cos(t * np.pi / 3), 30 * np.sin(t * np.pi / 3), 3 * t * np.pi], axis=-1)


def _curve2(t):
    x = -22 * np.cos(t) - 128 * np.sin(t) - 44 * np.cos(3 * t) - 78 * np.sin(3 * t)
    y = -10 * np.cos(2 * t) - 27 * np.sin(2 * t) + 38 * np.cos(4 * t) + 46 * np.sin(4 * t)
    z = 70 * np.cos(3 * t) - 40 * np.sin(3 * t)
    return np.stack([x, y, z], axis=-1)


CURVES = {1: (_curve1, 10 * np.pi), 2: (_curve2, 2 * np.pi)}


def curve_point(curve_id: int, t) -> np.ndarray:
    if curve_id not in CURVES:
        raise ValueError(f"unknown curve id {curve_id!r}; expected 1 or 2")
    return CURVES[curve_id][0](np.asarray(t, dtype=float))


def sample_curve(curve_id: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``m`` points at uniformly spaced parameters over the curve's range.

    Returns the ``(m, 3)`` point array and the raw curve parameters.
    """
    if curve_id not in CURVES:
        raise ValueError(f"unknown curve id {curve_id!r}; expected 1 or 2")
    if m < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(0.0, CURVES[curve_id][1], m)
    return curve_point(curve_id, t), t


# ----------------------------------------------------------------------
# parameters and knots


def chord_params(points) -> np.ndarray:
    """Cumulative chord length normalised to ``[0, 1]``."""
    q = np.asarray(points, dtype=float)
    if q.ndim != 2 or q.shape[0] < 2:
        raise ValueError("need at least two points")
    steps = np.linalg.norm(np.diff(q, axis=0), axis=1)
    total = steps.sum()
    if total == 0.0:
        raise ValueError("all points coincide; chord length is zero")
    nu = np.concatenate([[0.0], np.cumsum(steps)]) / total
    nu[-1] = 1.0
    return nu


def averaged_knots(nu, n_ctrl: int) -> KnotVector:
    """Clamped cubic knots for ``n_ctrl`` control points over parameters ``nu``.

    Interior knot ``j`` (``j = 1 .. n_ctrl - 4``) is the mean of ``nu`` at the
    three fractional indices ``c_j - 1, c_j, c_j + 1`` with
    ``c_j = 1 + j (m - 3) / (n_ctrl - 3)``; for ``m == n_ctrl`` this is exactly
    the classical average of three consecutive parameters used for
    interpolation.
    """
    nu = np.asarray(nu, dtype=float)
    m = nu.size
    if n_ctrl < ORDER or n_ctrl > m:
        raise ValueError(f"n_ctrl must lie in [{ORDER}, {m}], got {n_ctrl}")
    a, b = nu[0], nu[-1]
    j = np.arange(1, n_ctrl - DEGREE)
    centre = 1.0 + j * (m - 3) / (n_ctrl - 3)
    grid = np.arange(m)
    window = np.stack([np.interp(centre + w, grid, nu) for w in (-1.0, 0.0, 1.0)])
    inner = window.mean(axis=0)
    knots = np.concatenate([np.full(ORDER, a), inner, np.full(ORDER, b)])
    return KnotVector(knots)


# ----------------------------------------------------------------------
# basis evaluation


def find_span(knots: KnotVector, t: float) -> int:
    """Index ``s`` with ``knots[s] <= t < knots[s + 1]`` (last span at the right end)."""
    tk = knots.knots
    lo, hi = knots.domain
    if not lo <= t <= hi:
        raise ValueError(f"parameter {t!r} outside [{lo}, {hi}]")
    if t == hi:
        return knots.n_basis - 1
    return int(np.searchsorted(tk, t, side="right")) - 1


def basis_row(knots: KnotVector, t: float) -> tuple[int, np.ndarray]:
    """Nonzero cubic basis values at ``t`` by the Cox-de Boor triangle.

    Returns ``(first, values)`` where ``values[k]`` belongs to basis
    function ``first + k``.
    """
    tk = knots.knots
    s = find_span(knots, t)
    N = np.zeros(ORDER)
    left = np.zeros(ORDER)
    right = np.zeros(ORDER)
    N[0] = 1.0
    for d in range(1, ORDER):
        left[d] = t - tk[s + 1 - d]
        right[d] = tk[s + d] - t
        saved = 0.0
        for r in range(d):
            temp = N[r] / (right[r + 1] + left[d - r])
            N[r] = saved + right[r + 1] * temp
            saved = left[d - r] * temp
        N[d] = saved
    return s - DEGREE, N


def collocation_matrix(knots: KnotVector, nu) -> RowMatrix:
    """Sparse ``m x n_basis`` matrix whose row ``i`` holds the basis at ``nu[i]``."""
    nu = np.asarray(nu, dtype=float)
    m = nu.size
    rows = np.repeat(np.arange(m), ORDER)
    cols = np.empty(m * ORDER, dtype=np.intp)
    vals = np.empty(m * ORDER)
    for i, t in enumerate(nu):
        first, v = basis_row(knots, float(t))
        cols[i * ORDER:(i + 1) * ORDER] = np.arange(first, first + ORDER)
        vals[i * ORDER:(i + 1) * ORDER] = v
    A = sparse.csr_array((vals, (rows, cols)), shape=(m, knots.n_basis))
    return RowMatrix(A)


def evaluate(knots: KnotVector, ctrl, t) -> np.ndarray:
    """Points of the spline with control net ``ctrl`` at parameters ``t``."""
    ctrl = np.asarray(ctrl, dtype=float)
    out = []
    for ti in np.atleast_1d(t):
        first, v = basis_row(knots, float(ti))
        out.append(v @ ctrl[first:first + ORDER])
    return np.array(out)


# ----------------------------------------------------------------------
# fitting


@dataclass
class CurveFit:
    control: np.ndarray
    report: SolveReport
    knots: KnotVector
    params: np.ndarray
    lsq_control: np.ndarray


def fit_curve(
    points,
    n_ctrl: int,
    config: SolverConfig | None = None,
    *,
    project_data: bool = True,
    check_interval: int = 1,
) -> CurveFit:
    """Least-squares cubic B-spline fit driven by a row-action method.

    The x, y and z systems share the collocation matrix and are stepped
    together; the run stops once ``||P_k - P*||_F^2 / ||P_0 - P*||_F^2``
    reaches ``config.rse_tol``, with ``P*`` the direct least-squares net.

    With ``project_data`` (the default) each right-hand side is replaced by
    its projection ``A P*`` onto the range of the collocation matrix. The
    least-squares solution is unchanged, and the systems become consistent,
    which the row-action methods need in order to converge to it rather than
    to a neighbourhood of it.
    """
    config = config or SolverConfig()
    q = np.asarray(points, dtype=float)
    if q.ndim != 2 or q.shape[1] != 3:
        raise ValueError(f"points must have shape (m, 3), got {q.shape}")
    nu = chord_params(q)
    knots = averaged_knots(nu, n_ctrl)
    A = collocation_matrix(knots, nu)
    dense = A.toarray()
    p_star = np.column_stack([min_norm_solution(dense, q[:, c]) for c in range(3)])
    rhs = dense @ p_star if project_data else q
    runs = [SolverRun(A, rhs[:, c], config, x_star=p_star[:, c]) for c in range(3)]

    def combined() -> float:
        return sum(run.error_sq() for run in runs)

    e0 = combined() or 1.0
    history = [] if config.record_history else None
    t0 = time.perf_counter()
    rse = combined() / e0
    if history is not None:
        history.append((0, rse, 0))
    k = 0
    reason = ""
    while True:
        if rse <= config.rse_tol:
            reason = "tolerance reached"
            break
        if not np.isfinite(rse):
            reason = "diverged"
            break
        if k >= config.max_iters:
            reason = "iteration limit"
            break
        moved = [run.step() for run in runs]
        if not any(moved):
            reason = "stalled"
            break
        k += 1
        if k % check_interval == 0 or k >= config.max_iters:
            rse = combined() / e0
            if history is not None:
                history.append((k, rse, int(sum(run.last_selected.size for run in runs))))
    wall = time.perf_counter() - t0
    control = np.column_stack([run.state.x for run in runs])
    report = SolveReport(
        iterations=k,
        converged=bool(rse <= config.rse_tol),
        final_rse=float(rse),
        x=control,
        stopping="rse",
        history=history,
        wall_time=wall,
        reason=reason,
    )
    return CurveFit(control, report, knots, nu, p_star)


def write_points_csv(path, pts) -> None:
    """CSV with header ``index,x,y,z`` and 17 significant digits."""
    pts = np.asarray(pts, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y", "z"])
        for i, p in enumerate(pts):
            w.writerow([i] + [f"{v:.17g}" for v in p])
