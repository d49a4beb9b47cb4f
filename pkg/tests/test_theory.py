import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rowact.datagen import SyntheticSpec, consistent_system, generate, svd_extremes
from rowact.greedy import row_losses
from rowact.matrix import RowMatrix
from rowact.solvers import SolverConfig
from rowact.theory import (
    MomentumCoeffs,
    beta_upper_bound,
    bound_report,
    epsilon_k,
    epsilon_lower_bound,
    fdbk_factor,
    lemma_pq,
    momentum_coeffs,
    mwrk_factor,
    rho_mfdbk,
    rho_mwrk,
    trace_momentum_run,
    verify_two_term_recurrence,
)


def test_momentum_coeffs_examples():
    c = momentum_coeffs(1.0, 0.0, 0.5)
    assert (c.gamma1, c.gamma2) == (0.5, 0.0)
    c = momentum_coeffs(0.75, 0.5, 0.2)
    assert c.gamma1 == pytest.approx(2.4875, abs=1e-15)
    assert c.gamma2 == pytest.approx(1.375, abs=1e-15)
    # alpha = 2 sits outside the open step-size interval; the formula still has its limit
    from rowact.theory import _coeffs

    c = _coeffs(2.0, 0.0, 0.37)
    assert (c.gamma1, c.gamma2) == (1.0, 0.0)


@pytest.mark.parametrize("rho", [0.0, -0.1, 1.01])
def test_momentum_coeffs_rho_domain(rho):
    with pytest.raises(ValueError):
        momentum_coeffs(1.0, 0.1, rho)


def test_rho_mwrk_examples():
    assert rho_mwrk(np.eye(2), [0, 1]) == pytest.approx(0.5)
    A = generate(SyntheticSpec("gaussian", 9, 4, seed=2))
    s = svd_extremes(A)[1]
    assert rho_mwrk(A, np.arange(9)) == pytest.approx(s * s / A.frob_sq, rel=1e-14)
    assert rho_mwrk(np.diag([2.0, 1.0]), [1]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rho_mwrk(np.eye(2), [])


def test_rho_mfdbk_examples():
    assert rho_mfdbk(np.eye(2), [0, 1], [0, 1]) == pytest.approx(1.0)
    assert rho_mfdbk(np.eye(5), range(5), range(5)) == pytest.approx(1.0)
    assert rho_mfdbk(np.diag([2.0, 1.0]), [0], [0]) == pytest.approx(9 / 40, rel=1e-14)
    with pytest.raises(ValueError):
        rho_mfdbk(np.eye(2), [], [0])
    with pytest.raises(ValueError):
        rho_mfdbk(np.eye(2), [0], [])


def test_epsilon_examples():
    A = RowMatrix(np.eye(2))
    r = np.array([1.0, 0.0])
    loss = row_losses(A, r)
    eps = epsilon_k(A, loss, r)
    assert eps == pytest.approx(0.75)
    assert eps * A.frob_sq == pytest.approx(1.5)
    assert epsilon_lower_bound(A, loss.support) == pytest.approx(1.5)
    m = 6
    A = RowMatrix(np.eye(m))
    r = np.ones(m)
    assert epsilon_k(A, row_losses(A, r), r) == pytest.approx(1 / m)
    with pytest.raises(ValueError):
        epsilon_k(A, row_losses(A, np.zeros(m)), np.zeros(m))


def test_beta_upper_bound_examples():
    assert beta_upper_bound(1.0, 1.0) == pytest.approx((math.sqrt(28) - 4) / 6, rel=1e-15)
    assert beta_upper_bound(1.0, 1.0) == pytest.approx(0.21525, abs=5e-6)
    assert beta_upper_bound(1.0, 1e-12) < 1e-12
    assert beta_upper_bound(2 - 1e-12, 1.0) < 1e-12


def test_beta_bound_is_root():
    for a in (0.3, 1.0, 1.7):
        for rho in (0.05, 0.5, 1.0):
            b = beta_upper_bound(a, rho)
            c = momentum_coeffs(a, b, rho)
            assert c.gamma1 + c.gamma2 == pytest.approx(1.0, abs=1e-14)


def test_lemma_pq_examples():
    assert lemma_pq(0.0, 0.0) == (0.0, 0.0)
    assert lemma_pq(0.5, 0.0) == (0.0, 0.5)
    p, q = lemma_pq(0.3, 0.1)
    assert (p, q) == (pytest.approx(0.2), pytest.approx(0.5))
    for bad in ((0.6, 0.5), (-0.1, 0.1), (0.1, -0.1)):
        with pytest.raises(ValueError):
            lemma_pq(*bad)


def test_mwrk_factor_examples():
    assert mwrk_factor(np.eye(2)) == (1.0, 0.0)
    gt, f = mwrk_factor(np.eye(5))
    assert gt == 4 and f == pytest.approx(1 - 1 / 4)
    gt, f = mwrk_factor(np.array([[3.0, 4.0]]))
    assert (gt, f) == (0.0, 0.0)


@pytest.mark.parametrize("m", [2, 6, 10])
def test_mwrk_factor_scaled_rows(m):
    # unit rows (c, +-s) give A^T A = diag(m c^2, m s^2); pick s so sigma_r = 0.5
    s = math.sqrt(0.25 / m)
    c = math.sqrt(1 - s * s)
    rows = np.array([[c, s if i % 2 else -s] for i in range(m)])
    gt, f = mwrk_factor(rows)
    assert gt == pytest.approx(m - 1)
    assert f == pytest.approx(1 - 0.25 / (m - 1), rel=1e-12)


def test_fdbk_factor_examples():
    for q in (0.1, 0.5, 1.0):
        assert fdbk_factor(np.eye(4), range(4), range(4), q) == pytest.approx(0.0, abs=1e-15)
    A = generate(SyntheticSpec("gaussian", 10, 4, seed=3))
    U, U_hat = [1, 4], [0, 1, 4, 7, 9]
    f_one = fdbk_factor(A, U, U_hat, 1.0)
    fro_hat = A.row_sq_norms[U_hat].sum()
    s1_hat = svd_extremes(A.rows(U_hat))[0]
    sr = svd_extremes(A)[1]
    g_hat = 0.5 * (A.frob_sq / fro_hat + 1)
    assert f_one == pytest.approx(1 - g_hat * (fro_hat / s1_hat**2) * (sr**2 / A.frob_sq), rel=1e-13)
    same = [2, 3]
    assert fdbk_factor(A, same, same, 1.0) == pytest.approx(fdbk_factor(A, same, same, 1e-9), rel=1e-8)
    for bad in ((U, U_hat, 0.0), ([], U_hat, 0.5), (U, [], 0.5)):
        with pytest.raises(ValueError):
            fdbk_factor(A, *bad)


def test_verify_recurrence_detector():
    c = [MomentumCoeffs(0.5, 0.1, 1.0)] * 6
    assert all(verify_two_term_recurrence([0.0] * 6, c))
    e = [0.5**k for k in range(6)]
    ok = verify_two_term_recurrence(e, c)
    assert all(ok)
    e[3] = 0.5
    ok = verify_two_term_recurrence(e, c)
    assert ok == [True, True, False, True, True, True]
    with pytest.raises(ValueError):
        verify_two_term_recurrence(e, c[:-1])
    with pytest.raises(ValueError):
        verify_two_term_recurrence([1.0, 0.5], c[:2])


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1.99), st.floats(0.001, 1.0), st.floats(0.0, 0.999))
def test_admissible_region(alpha, rho, frac):
    beta = frac * beta_upper_bound(alpha, rho)
    c = momentum_coeffs(alpha, beta, rho)
    assert c.gamma1 + c.gamma2 < 1
    assert lemma_pq(c.gamma1, c.gamma2)[1] < 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_rho_mfdbk_in_unit_interval(m, n, seed):
    rng = np.random.default_rng(seed)
    A = RowMatrix(rng.standard_normal((m, n)))
    r = rng.standard_normal(m)
    loss = row_losses(A, r)
    from rowact.greedy import greedy_set

    U = greedy_set(loss, 0.5)
    rho = rho_mfdbk(A, U, loss.support)
    assert 0 < rho <= 1 + 1e-12


def test_bound_report():
    A = generate(SyntheticSpec("udv", 40, 10, r=4, kappa=3.0, seed=8))
    probe = bound_report(A, 0.75, 0.0)
    rep = bound_report(A, 0.75, 0.5 * probe.beta_max)
    d = rep.to_dict()
    assert d["rank"] == 4
    assert d["rho"] == pytest.approx(rep.sigma_min_nonzero**2 / A.frob_sq)
    assert rep.gamma1 + rep.gamma2 < 1 and d["q"] < 1
    assert d["beta_max"] == beta_upper_bound(0.75, d["rho"])
    assert bound_report(A, 0.75, 2 * probe.beta_max).pq is None


@pytest.mark.parametrize("method", ["mmwrk", "mfdbk", "mwrk", "fdbk"])
def test_recurrence_holds_small(method):
    A = generate(SyntheticSpec("gaussian", 60, 8, seed=11))
    b, x_star = consistent_system(A)
    tr = trace_momentum_run(A, b, x_star, SolverConfig(method))
    assert tr.converged
    assert len(tr.errors) == len(tr.coeffs) == tr.iterations + 2
    assert all(tr.check())
    if method in ("mfdbk", "fdbk"):
        assert tr.eta_sq == tr.eta_dot_r
        assert all(a <= b * (1 + 1e-10) for a, b in zip(tr.adj_sq, tr.adj_bound))
        assert all(e >= lo - 1e-12 for e, lo in zip(tr.eps_scaled, tr.eps_lower))


def test_trace_rejects_unsupported():
    with pytest.raises(ValueError):
        trace_momentum_run(np.eye(2), np.ones(2), np.ones(2), SolverConfig("kaczmarz"))
