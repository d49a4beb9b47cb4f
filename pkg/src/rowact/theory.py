"""Convergence factors, momentum coefficients and runtime recurrence checks.

All error quantities are squared Euclidean norms. The two-term recurrence
``e_{k+1} <= g1_k e_k + g2 e_{k-1}`` for the momentum methods is exposed both
as closed-form coefficients and as a checker that runs over a recorded solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .datagen import svd_extremes
from .greedy import LossVector, build_eta
from .matrix import RowMatrix, as_row_matrix
from .solvers import Method, SolverConfig, SolverRun, StepInfo


@dataclass(frozen=True)
class MomentumCoeffs:
    gamma1: float
    gamma2: float
    rho: float


def _coeffs(alpha: float, beta: float, rho: float) -> MomentumCoeffs:
    g1 = (1 + 3 * beta + beta**2) + (alpha**2 - 2 * alpha - alpha * beta) * rho
    g2 = 2 * beta**2 + (1 + alpha) * beta
    return MomentumCoeffs(g1, g2, rho)


def momentum_coeffs(alpha: float, beta: float, rho: float) -> MomentumCoeffs:
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if beta < 0.0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return _coeffs(alpha, beta, rho)


def beta_upper_bound(alpha: float, rho: float) -> float:
    """Largest momentum for which ``gamma1 + gamma2 < 1`` at rate constant ``rho``.

    ``gamma1 + gamma2 - 1 = 3 beta^2 + tau1 beta - tau2`` with
    ``tau1 = 4 + alpha - alpha rho`` and ``tau2 = alpha (2 - alpha) rho``;
    the bound is the positive root of that quadratic.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    tau1 = 4 + alpha - alpha * rho
    tau2 = alpha * (2 - alpha) * rho
    # rationalised root, free of cancellation when tau2 is tiny
    return 2 * tau2 / (math.sqrt(tau1 * tau1 + 12 * tau2) + tau1)


def lemma_pq(a1: float, a2: float) -> tuple[float, float]:
    """``(p, q)`` for ``F_{k+1} <= a1 F_k + a2 F_{k-1}``, giving ``F_{k+1} <= q^k (1 + p) F_0``."""
    if a1 < 0 or a2 < 0 or not a1 + a2 < 1:
        raise ValueError(f"need a1 >= 0, a2 >= 0 and a1 + a2 < 1; got a1={a1}, a2={a2}")
    root = math.sqrt(a1 * a1 + 4 * a2)
    return (root - a1) / 2, (root + a1) / 2


# ----------------------------------------------------------------------
# rate constants


def _frob_sq(A: RowMatrix, idx) -> float:
    return float(A.row_sq_norms[np.asarray(idx, dtype=np.intp)].sum())


def _nonempty(idx, name: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.intp)
    if idx.size == 0:
        raise ValueError(f"{name} must be nonempty")
    return idx


def _sigma_min(A: RowMatrix, sigma_min: float | None) -> float:
    return svd_extremes(A)[1] if sigma_min is None else sigma_min


def rho_mwrk(A, U_hat, sigma_min: float | None = None) -> float:
    """``sigma_r(A)^2 / ||A[U_hat]||_F^2``."""
    A = as_row_matrix(A)
    U_hat = _nonempty(U_hat, "U_hat")
    s = _sigma_min(A, sigma_min)
    return s * s / _frob_sq(A, U_hat)


def rho_mfdbk(A, U, U_hat, sigma_min: float | None = None) -> float:
    A = as_row_matrix(A)
    U = _nonempty(U, "U")
    U_hat = _nonempty(U_hat, "U_hat")
    s = _sigma_min(A, sigma_min)
    s1_U = svd_extremes(A.rows(U))[0]
    fro = A.frob_sq
    return (0.5 * fro / _frob_sq(A, U_hat) + 0.5) * (_frob_sq(A, U) / fro) * (s * s / (s1_U * s1_U))


def epsilon_k(A, loss: LossVector, r) -> float:
    """``max psi / (2 ||r||^2) + 1 / (2 ||A||_F^2)``."""
    A = as_row_matrix(A)
    rr = float(np.vdot(r, r).real)
    if rr == 0.0:
        raise ValueError("epsilon_k is undefined for a zero residual")
    return loss.max_val / (2 * rr) + 1 / (2 * A.frob_sq)


def epsilon_lower_bound(A, U_hat) -> float:
    """Lower bound ``0.5 ||A||_F^2 / ||A[U_hat]||_F^2 + 0.5`` on ``epsilon_k ||A||_F^2``."""
    A = as_row_matrix(A)
    return 0.5 * A.frob_sq / _frob_sq(A, _nonempty(U_hat, "U_hat")) + 0.5


def mwrk_factor(A) -> tuple[float, float]:
    """``(gamma_tilde, 1 - sigma_r^2 / gamma_tilde)`` for the greedy single-row method.

    ``gamma_tilde`` is the largest sum of squared row norms with one row left
    out. A single-row system is solved by one projection, so its factor is 0.
    """
    A = as_row_matrix(A)
    gamma_tilde = A.frob_sq - float(A.row_sq_norms.min())
    if A.m == 1 or gamma_tilde == 0.0:
        return 0.0, 0.0
    s = svd_extremes(A)[1]
    return gamma_tilde, max(0.0, 1.0 - s * s / gamma_tilde)


def fdbk_factor(A, U, U_hat, q_hat: float) -> float:
    """One-step contraction factor of the greedy block method for a given ``q_hat``."""
    A = as_row_matrix(A)
    U = _nonempty(U, "U")
    U_hat = _nonempty(U_hat, "U_hat")
    if not 0.0 < q_hat <= 1.0:
        raise ValueError(f"q_hat must lie in (0, 1], got {q_hat}")
    if not np.isin(U, U_hat).all():
        raise ValueError("U must be a subset of U_hat")
    fro = A.frob_sq
    f_hat, f_U = _frob_sq(A, U_hat), _frob_sq(A, U)
    gamma_hat = 0.5 * (fro / (q_hat * f_hat + (1 - q_hat) * f_U) + 1)
    s1_hat = svd_extremes(A.rows(U_hat))[0]
    s = svd_extremes(A)[1]
    return 1 - gamma_hat * (f_hat / (s1_hat * s1_hat)) * (s * s / fro)


# ----------------------------------------------------------------------
# reports and runtime checks


@dataclass
class BoundReport:
    sigma_max: float
    sigma_min_nonzero: float
    rank: int
    gamma_tilde: float
    mwrk_factor: float
    rho: float
    alpha: float
    beta: float
    gamma1: float
    gamma2: float
    beta_max: float
    pq: tuple[float, float] | None
    per_step_factors: list[float] | None = None

    def __post_init__(self):
        if self.pq is not None and self.gamma1 + self.gamma2 < 1:
            assert self.pq[1] < 1, "q must be below 1 when gamma1 + gamma2 < 1"

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["p"], out["q"] = self.pq if self.pq is not None else (None, None)
        del out["pq"]
        return out


def bound_report(A, alpha: float, beta: float) -> BoundReport:
    """Global bounds for ``A`` using the worst-case rate ``rho = sigma_r^2 / ||A||_F^2``."""
    A = as_row_matrix(A)
    s1, sr, rank = svd_extremes(A)
    gt, factor = mwrk_factor(A)
    rho = sr * sr / A.frob_sq
    c = momentum_coeffs(alpha, beta, rho)
    pq = lemma_pq(c.gamma1, c.gamma2) if c.gamma1 + c.gamma2 < 1 else None
    return BoundReport(
        sigma_max=s1, sigma_min_nonzero=sr, rank=rank, gamma_tilde=gt, mwrk_factor=factor,
        rho=rho, alpha=alpha, beta=beta, gamma1=c.gamma1, gamma2=c.gamma2,
        beta_max=beta_upper_bound(alpha, rho), pq=pq,
    )


def verify_two_term_recurrence(error_history, coeff_history, slack: float = 1e-10) -> list[bool]:
    """Check ``e[k+1] <= g1[k] e[k] + g2[k] e[k-1] + slack * e[k]`` for every ``k``.

    ``coeff_history[k]`` holds the coefficients computed at iterate ``k``.
    The returned list is aligned with the histories; the first and last
    entries have nothing to check and are always True.
    """
    e = list(error_history)
    c = list(coeff_history)
    if len(e) != len(c):
        raise ValueError(f"history lengths differ: {len(e)} errors vs {len(c)} coefficients")
    if len(e) < 3:
        raise ValueError("need at least three iterates to check a two-term recurrence")
    ok = [True] * len(e)
    for k in range(1, len(e) - 1):
        bound = c[k].gamma1 * e[k] + c[k].gamma2 * e[k - 1] + slack * e[k]
        ok[k] = e[k + 1] <= bound
    return ok


@dataclass
class RecurrenceTrace:
    """Per-step data collected from a momentum run for the theory checks."""

    errors: list[float] = field(default_factory=list)
    coeffs: list[MomentumCoeffs | None] = field(default_factory=list)
    eta_sq: list[float] = field(default_factory=list)
    eta_dot_r: list[float] = field(default_factory=list)
    adj_sq: list[float] = field(default_factory=list)
    adj_bound: list[float] = field(default_factory=list)
    eps_scaled: list[float] = field(default_factory=list)
    eps_lower: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def check(self, slack: float = 1e-10) -> list[bool]:
        return verify_two_term_recurrence(self.errors, self.coeffs, slack)


def trace_momentum_run(A, b, x_star, config: SolverConfig) -> RecurrenceTrace:
    """Run a greedy momentum method and record every quantity the theory bounds.

    For each step the rate constant is computed from that step's actual
    index sets: ``rho_mwrk`` over the nonzero-loss rows for the single-row
    methods, ``rho_mfdbk`` over the selected block for the block methods.
    Submatrix SVDs make this a desk-scale tool.
    """
    A = as_row_matrix(A)
    if config.method not in (Method.MWRK, Method.MMWRK, Method.FDBK, Method.MFDBK):
        raise ValueError(f"no recurrence theory for method {config.method.value}")
    run = SolverRun(A, b, config, x_star)
    sr = svd_extremes(A)[1]
    block = config.method.is_block
    out = RecurrenceTrace()
    out.errors.append(float(np.vdot(run.state.x_prev - run.x_star, run.state.x_prev - run.x_star).real))
    out.coeffs.append(None)

    def observe(info: StepInfo):
        st = info.state
        U_hat = info.loss.support
        if block:
            U = info.selected
            rho = rho_mfdbk(A, U, U_hat, sigma_min=sr)
            eta = build_eta(st.r, U)
            s1_U = svd_extremes(A.rows(U))[0]
            eta_sq = float(np.vdot(eta, eta).real)
            out.eta_sq.append(eta_sq)
            out.eta_dot_r.append(float(np.vdot(eta, st.r).real))
            g2 = A.rmatvec(eta)
            out.adj_sq.append(float(np.vdot(g2, g2).real))
            out.adj_bound.append(s1_U * s1_U * eta_sq)
            out.eps_scaled.append(epsilon_k(A, info.loss, st.r) * A.frob_sq)
            out.eps_lower.append(epsilon_lower_bound(A, U_hat))
        else:
            rho = rho_mwrk(A, U_hat, sigma_min=sr)
        out.coeffs.append(_coeffs(config.alpha, config.beta, rho))

    out.errors.append(run.error_sq())
    tol = config.rse_tol
    while run.rse() > tol and run.state.k < config.max_iters:
        if not run.step(observe):
            break
        out.errors.append(run.error_sq())
    # the final iterate has no step of its own
    out.coeffs.append(None)
    out.iterations = run.state.k
    out.converged = run.rse() <= tol
    return out
