"""Greedy row-action solvers with optional heavy-ball momentum.

Every method shares one driver, :class:`SolverRun`, which keeps the iterate
and the residual (plus their predecessors) and advances them with either a
single-row projection step or a block step along ``A^* eta``. The residual is
updated by recurrence rather than recomputed; ``A A^*`` is never formed.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .datagen import make_rng
from .greedy import LossVector, build_eta, greedy_set, row_losses
from .matrix import RowMatrix, as_row_matrix

class Method(str, Enum):
    KACZMARZ = "kaczmarz"
    ETA = "eta"
    MWRK = "mwrk"
    MMWRK = "mmwrk"
    FDBK = "fdbk"
    MFDBK = "mfdbk"

    @property
    def is_block(self) -> bool:
        return self in (Method.ETA, Method.FDBK, Method.MFDBK)

    @property
    def baseline(self) -> "Method":
        """The momentum-free method this one is compared against."""
        return {Method.MMWRK: Method.MWRK, Method.MFDBK: Method.FDBK}.get(self, self)


DEFAULT_PARAMS = {
    Method.MMWRK: (0.75, 0.5),
    Method.MFDBK: (0.5, 0.5),
}


class MomentumBoundWarning(UserWarning):
    """Momentum parameter outside the range covered by the convergence theory."""


class DegenerateSketchError(ArithmeticError):
    """``A^* eta`` vanished, so the block step is undefined."""


@dataclass(frozen=True)
class SolverConfig:
    """Method choice and iteration parameters.

    ``alpha`` and ``beta`` default to ``(0.75, 0.5)`` for mMWRK,
    ``(0.5, 0.5)`` for mFDBK and ``(1, 0)`` for everything else.
    ``seed`` only drives the Gaussian sketch of ``Method.ETA``.
    """

    method: Method = Method.MWRK
    alpha: float | None = None
    beta: float | None = None
    theta: float = 0.5
    rse_tol: float = 1e-12
    max_iters: int = 100_000
    refresh_period: int = 5000
    record_history: bool = False
    seed: int = 0

    def __post_init__(self):
        method = Method(self.method)
        object.__setattr__(self, "method", method)
        a0, b0 = DEFAULT_PARAMS.get(method, (1.0, 0.0))
        if self.alpha is None:
            object.__setattr__(self, "alpha", a0)
        if self.beta is None:
            object.__setattr__(self, "beta", b0)
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.max_iters < 0 or self.refresh_period < 1:
            raise ValueError("max_iters must be >= 0 and refresh_period >= 1")
        if self.beta > 0.0:
            from .theory import beta_upper_bound

            # the admissible bound grows with rho, so rho = 1 gives the loosest one
            loosest = beta_upper_bound(self.alpha, 1.0)
            if self.beta >= loosest:
                warnings.warn(
                    f"beta={self.beta:g} exceeds the momentum bound {loosest:.5g} "
                    f"(alpha={self.alpha:g}, rho=1); convergence is not covered by the theory",
                    MomentumBoundWarning,
                    stacklevel=3,
                )


@dataclass
class IterateState:
    x: np.ndarray
    x_prev: np.ndarray
    r: np.ndarray
    r_prev: np.ndarray
    k: int = 0

    @classmethod
    def zero(cls, A: RowMatrix, b) -> "IterateState":
        b = np.asarray(b)
        dtype = np.result_type(A.dtype, b.dtype)
        x = np.zeros(A.n, dtype=dtype)
        r = b.astype(dtype, copy=True)
        return cls(x, x.copy(), r, r.copy(), 0)


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    final_rse: float
    x: np.ndarray
    stopping: str = "rse"
    history: list[tuple[int, float, int]] | None = None
    wall_time: float = 0.0
    reason: str = ""

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_rse": self.final_rse,
            "stopping": self.stopping,
            "reason": self.reason,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


@dataclass(frozen=True)
class StepInfo:
    """What a step observer sees just before the update at iteration ``k``."""

    k: int
    state: IterateState
    loss: LossVector | None
    selected: np.ndarray


# ----------------------------------------------------------------------
# step rules


def single_row_step(state: IterateState, A: RowMatrix, i: int, alpha: float, beta: float) -> IterateState:
    """Relaxed projection onto row ``i`` plus ``beta`` times the last move."""
    h = state.r[i] / A.row_sq_norms[i]
    ah = alpha * h
    x = state.x + ah * A.row_conj(i)
    r = state.r - ah * A.gram_column(i)
    if beta:
        x += beta * (state.x - state.x_prev)
        r += beta * (state.r - state.r_prev)
    return IterateState(x, state.x, r, state.r, state.k + 1)


def eta_block_step(
    state: IterateState,
    A: RowMatrix,
    eta,
    alpha: float,
    beta: float,
    support=None,
) -> IterateState:
    """Step along ``A^* eta`` with length ``alpha * (eta^* r) / ||A^* eta||^2``.

    When ``support`` lists the nonzero rows of ``eta`` only those rows of
    ``A`` are touched for the adjoint product.
    """
    eta = np.asarray(eta)
    if support is None:
        g2 = A.rmatvec(eta)
        num = np.vdot(eta, state.r)
    else:
        support = np.asarray(support, dtype=np.intp)
        e = eta[support]
        g2 = A.adjoint_matvec_rows(support, e)
        num = np.vdot(e, state.r[support])
    den = np.vdot(g2, g2).real
    if den == 0.0:
        raise DegenerateSketchError("A^* eta is zero; the sketch carries no information")
    ag = alpha * (num / den)
    x = state.x + ag * g2
    r = state.r - ag * A.matvec(g2)
    if beta:
        x += beta * (state.x - state.x_prev)
        r += beta * (state.r - state.r_prev)
    return IterateState(x, state.x, r, state.r, state.k + 1)


def refresh_residual(state: IterateState, A: RowMatrix, b) -> IterateState:
    """Recompute both residuals from scratch."""
    b = np.asarray(b)
    return replace(state, r=b - A.matvec(state.x), r_prev=b - A.matvec(state.x_prev))


# ----------------------------------------------------------------------
# driver


def _sq_norm(v) -> float:
    return float(np.vdot(v, v).real)


class SolverRun:
    """One in-progress solve that can be advanced a step at a time.

    Parameters
    ----------
    A, b
        The system. ``A`` may be anything :class:`RowMatrix` accepts.
    config
        Method and parameters.
    x_star
        Reference solution for the relative solution error
        ``||x - x*||^2 / ||x*||^2``. Without it the squared relative residual
        ``||r||^2 / ||b||^2`` is used instead.
    """

    def __init__(self, A, b, config: SolverConfig, x_star=None):
        self.A = as_row_matrix(A)
        self.b = np.asarray(b)
        if self.b.shape != (self.A.m,):
            raise ValueError(f"b has shape {self.b.shape}, expected ({self.A.m},)")
        self.config = config
        self.x_star = None if x_star is None else np.asarray(x_star)
        if self.x_star is not None and self.x_star.shape != (self.A.n,):
            raise ValueError(f"x_star has shape {self.x_star.shape}, expected ({self.A.n},)")
        self.state = IterateState.zero(self.A, self.b)
        self.stalled = False
        self.last_selected = np.empty(0, dtype=np.intp)
        self._rng = make_rng(config.seed) if config.method is Method.ETA else None
        if self.x_star is not None:
            self._scale = _sq_norm(self.x_star) or 1.0
        else:
            self._scale = _sq_norm(self.b) or 1.0

    @property
    def stopping(self) -> str:
        return "rse" if self.x_star is not None else "residual"

    def error_sq(self) -> float:
        """``||x - x*||^2`` (requires ``x_star``)."""
        d = self.state.x - self.x_star
        return _sq_norm(d)

    def rse(self) -> float:
        if self.x_star is not None:
            return self.error_sq() / self._scale
        return _sq_norm(self.state.r) / self._scale

    def refresh(self):
        self.state = refresh_residual(self.state, self.A, self.b)

    def select(self) -> tuple[LossVector | None, np.ndarray]:
        """Row selection for the current iterate (no state change)."""
        method = self.config.method
        if method is Method.KACZMARZ:
            i = self.state.k % self.A.m
            return None, np.array([i], dtype=np.intp)
        if method is Method.ETA:
            return None, np.arange(self.A.m)
        loss = row_losses(self.A, self.state.r)
        if loss.max_val == 0.0:
            return loss, np.empty(0, dtype=np.intp)
        if method in (Method.MWRK, Method.MMWRK):
            return loss, np.array([loss.max_idx], dtype=np.intp)
        return loss, greedy_set(loss, self.config.theta)

    def step(self, observer: Callable[[StepInfo], None] | None = None) -> bool:
        """Advance one iteration. Returns False if no step could be taken."""
        cfg = self.config
        loss, sel = self.select()
        if sel.size == 0:
            self.stalled = True
            return False
        if observer is not None:
            observer(StepInfo(self.state.k, self.state, loss, sel))
        if cfg.method is Method.ETA:
            eta = self._rng.standard_normal(self.A.m)
            try:
                self.state = eta_block_step(self.state, self.A, eta, cfg.alpha, cfg.beta)
            except DegenerateSketchError:
                self.stalled = True
                return False
        elif cfg.method.is_block:
            eta = build_eta(self.state.r, sel)
            try:
                self.state = eta_block_step(self.state, self.A, eta, cfg.alpha, cfg.beta, support=sel)
            except DegenerateSketchError:
                self.stalled = True
                return False
        else:
            self.state = single_row_step(self.state, self.A, int(sel[0]), cfg.alpha, cfg.beta)
        self.last_selected = sel
        if self.state.k % cfg.refresh_period == 0:
            self.refresh()
        return True


def solve(A, b, x_star=None, config: SolverConfig | None = None, observer=None) -> SolveReport:
    """Run a row-action method from ``x = 0`` until the stopping rule fires.

    The run stops once the relative solution error drops to ``rse_tol`` or
    ``max_iters`` steps have been taken. Non-convergence (including a residual
    that has stalled at zero loss, or a diverging iterate) is reported, not
    raised.
    """
    config = config or SolverConfig()
    run = SolverRun(A, b, config, x_star)
    t0 = time.perf_counter()
    history = [] if config.record_history else None
    tol = config.rse_tol
    rse = run.rse()
    if history is not None:
        history.append((0, rse, 0))
    reason = ""
    # a diverging momentum run overflows; that is reported, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            if rse <= tol and run.x_star is None:
                # the residual is a recurrence; confirm against a fresh one
                run.refresh()
                rse = run.rse()
            if rse <= tol:
                reason = "tolerance reached"
                break
            if not math.isfinite(rse):
                reason = "diverged"
                break
            if run.state.k >= config.max_iters:
                reason = "iteration limit"
                break
            if not run.step(observer):
                reason = "stalled"
                break
            rse = run.rse()
            if history is not None:
                history.append((run.state.k, rse, int(run.last_selected.size)))
    wall = time.perf_counter() - t0
    return SolveReport(
        iterations=run.state.k,
        converged=bool(rse <= tol),
        final_rse=float(rse),
        x=run.state.x,
        stopping=run.stopping,
        history=history,
        wall_time=wall,
        reason=reason,
    )
