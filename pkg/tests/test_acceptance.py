"""End-to-end acceptance checks, one per criterion, each at its stated tolerance.

Every check prints a single ``AC<n> PASS|FAIL`` line; the lines are also
collected into the pytest terminal summary. Run directly with
``python tests/test_acceptance.py`` for the lines alone.
"""

from __future__ import annotations

import sys
import time
import warnings
from pathlib import Path

import mpmath
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import min_norm_oracle, svd_extremes_oracle  # noqa: E402
from rowact.bench import BenchSpec, SweepSpec, run_bench, run_sweep, speedup  # noqa: E402
from rowact.bspline import (  # noqa: E402
    KnotVector,
    averaged_knots,
    basis_row,
    chord_params,
    fit_curve,
    sample_curve,
)
from rowact.datagen import (  # noqa: E402
    SyntheticSpec,
    consistent_system,
    generate,
    make_rng,
    min_norm_solution,
    svd_extremes,
)
from rowact.solvers import Method, MomentumBoundWarning, SolverConfig, SolverRun, solve  # noqa: E402
from rowact.theory import beta_upper_bound, lemma_pq, momentum_coeffs, trace_momentum_run  # noqa: E402

RESULTS: list[str] = []


def report(n: int, ok: bool, title: str, detail: str) -> None:
    line = f"AC{n:<2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MomentumBoundWarning)
        yield


def _gaussian(m, n, seed):
    A = generate(SyntheticSpec("gaussian", m, n, seed=seed))
    b, x_star = consistent_system(A)
    return A, b, x_star


# ----------------------------------------------------------------------


def check_reduction():
    t0 = time.perf_counter()
    A, b, x_star = _gaussian(200, 50, seed=1)
    ok = True
    for mom, base in (("mmwrk", "mwrk"), ("mfdbk", "fdbk")):
        r1 = SolverRun(A, b, SolverConfig(mom, alpha=1.0, beta=0.0), x_star)
        r2 = SolverRun(A, b, SolverConfig(base), x_star)
        for _ in range(50):
            r1.step()
            r2.step()
            ok &= np.array_equal(r1.state.x, r2.state.x) and np.array_equal(r1.state.r, r2.state.r)
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    return ok, f"mMWRK(1,0)==MWRK and mFDBK(1,0)==FDBK bitwise over 50 steps, {dt:.2f}s"


def _traces():
    A, b, x_star = _gaussian(300, 30, seed=1)
    assert svd_extremes(A)[2] == 30
    return {m: trace_momentum_run(A, b, x_star, SolverConfig(m)) for m in ("mmwrk", "mfdbk")}


_TRACE_CACHE: dict = {}


def traces():
    if not _TRACE_CACHE:
        t0 = time.perf_counter()
        _TRACE_CACHE.update(_traces())
        _TRACE_CACHE["_time"] = time.perf_counter() - t0
    return _TRACE_CACHE


def check_recurrence():
    tr = traces()
    parts, ok = [], True
    for m in ("mmwrk", "mfdbk"):
        flags = tr[m].check(slack=1e-10)
        good = tr[m].converged and all(flags)
        ok &= good
        parts.append(f"{m}: {sum(flags)}/{len(flags)} steps hold over {tr[m].iterations} its")
    ok &= tr["_time"] < 30
    return ok, "; ".join(parts) + f", {tr['_time']:.1f}s"


def check_pythagoras():
    A = generate(SyntheticSpec("udv", 400, 100, r=100, kappa=50.0, seed=3))
    b, x_star = consistent_system(A)
    run = SolverRun(A, b, SolverConfig("mwrk", max_iters=10_000), x_star)
    worst = 0.0
    steps = 0
    picked = []
    for _ in range(10_000):
        e = run.error_sq()
        run.step(lambda info: picked.append(info.loss.max_val))
        steps += 1
        e_next = run.error_sq()
        worst = max(worst, abs(e_next - (e - picked[-1])) / e)
    ok = steps == 10_000 and worst <= 1e-10
    return ok, f"{steps} MWRK steps, max relative defect {worst:.2e}"


def check_min_norm():
    A = generate(SyntheticSpec("udv", 500, 100, r=10, kappa=10.0, seed=4))
    b, x_gen = consistent_system(A)
    x_mn = min_norm_solution(A, b)
    ok, parts = True, []
    for method in Method:
        rep = solve(A, b, x_gen, SolverConfig(method))
        if not rep.converged:
            parts.append(f"{method.value}: not converged")
            ok &= method in (Method.KACZMARZ, Method.ETA)
            continue
        rel = np.linalg.norm(rep.x - x_mn) / np.linalg.norm(x_mn)
        ok &= rel <= 1e-5
        parts.append(f"{method.value}: {rel:.1e}")
    return ok, ", ".join(parts)


def check_speedups():
    t0 = time.perf_counter()
    ok, parts = True, []
    for m, n in ((2000, 200), (200, 2000)):
        spec = BenchSpec(
            SyntheticSpec("udv", m, n, r=20, kappa=20.0),
            [SolverConfig(x) for x in ("mwrk", "mmwrk", "fdbk", "mfdbk")],
            seeds=list(range(10)),
        )
        rows = run_bench(spec)
        su1, su2 = speedup(rows, "mmwrk"), speedup(rows, "mfdbk")
        conv = all(r["converged"] for r in rows)
        ok &= conv and su1 >= 1.2 and su2 >= 1.2
        parts.append(f"{m}x{n}: SU1={su1:.2f} SU2={su2:.2f}")
    dt = time.perf_counter() - t0
    ok &= dt < 300
    return ok, "; ".join(parts) + f", {dt:.0f}s"


def check_sweep():
    spec = SyntheticSpec("udv", 1500, 35, r=35, kappa=35.0, seed=0)
    ok, parts = True, []
    for method in ("mmwrk", "mfdbk"):
        rows = run_sweep(SweepSpec(spec, method, [1.0, 0.75], [0.0, 0.75]))
        it = {(r["alpha"], r["beta"]): r for r in rows}
        fast, base = it[(0.75, 0.75)], it[(1.0, 0.0)]
        ok &= fast["converged"] and base["converged"] and fast["iters"] < base["iters"]
        parts.append(f"{method}: (0.75,0.75)={fast['iters']} vs (1,0)={base['iters']}")
    return ok, "; ".join(parts)


def check_beta_region():
    t0 = time.perf_counter()
    alphas = [0.1 + 1.8 * (i + 0.5) / 20 for i in range(20)]
    rhos = [0.05 + 0.95 * (j + 1) / 20 for j in range(20)]
    ok, worst_sum, worst_q = True, 0.0, 0.0
    with mpmath.workdps(50):
        for a in alphas:
            for rho in rhos:
                beta = 0.99 * beta_upper_bound(a, rho)
                c = momentum_coeffs(a, beta, rho)
                q = lemma_pq(c.gamma1, c.gamma2)[1]
                # the same chain with the float inputs lifted to 50 digits
                A, B, R = mpmath.mpf(a), mpmath.mpf(beta), mpmath.mpf(rho)
                g1 = (1 + 3 * B + B * B) + (A * A - 2 * A - A * B) * R
                g2 = 2 * B * B + (1 + A) * B
                qq = (mpmath.sqrt(g1 * g1 + 4 * g2) + g1) / 2
                ok &= c.gamma1 + c.gamma2 < 1 and q < 1 and g1 + g2 < 1 and qq < 1
                worst_sum = max(worst_sum, float(g1 + g2))
                worst_q = max(worst_q, float(qq))
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    return ok, f"400 grid points, max g1+g2={worst_sum:.6f}, max q={worst_q:.6f}, {dt:.2f}s"


def check_block_identities():
    tr = traces()["mfdbk"]
    exact = tr.eta_sq == tr.eta_dot_r
    adj = all(a <= bnd * (1 + 1e-10) for a, bnd in zip(tr.adj_sq, tr.adj_bound))
    gap = min(e - lo for e, lo in zip(tr.eps_scaled, tr.eps_lower))
    ok = tr.converged and exact and adj and gap >= -1e-12 and len(tr.eta_sq) == tr.iterations
    return ok, (f"{tr.iterations} mFDBK steps: |eta|^2==eta.r {exact}, adjoint bound {adj}, "
                f"min eps gap {gap:.3e}")


def check_bspline():
    ok, parts = True, []
    pts, _ = sample_curve(1, 2000)
    nu = chord_params(pts)
    knots = averaged_knots(nu, 100)
    ts = np.linspace(0.0, 1.0, 1000)
    pu = max(abs(basis_row(knots, t)[1].sum() - 1.0) for t in ts)
    ok &= pu <= 1e-12
    parts.append(f"partition of unity {pu:.1e}")

    bez = basis_row(KnotVector([0, 0, 0, 0, 1, 1, 1, 1]), 0.5)[1]
    dev = float(np.max(np.abs(bez - [0.125, 0.375, 0.375, 0.125])))
    ok &= dev <= 1e-14
    parts.append(f"Bezier dev {dev:.1e}")

    fits = {}
    for curve in (1, 2):
        cpts, _ = sample_curve(curve, 2000)
        for method in ("mwrk", "mmwrk", "fdbk", "mfdbk"):
            fits[curve, method] = fit_curve(cpts, 100, SolverConfig(method))
    f = fits[1, "mfdbk"]
    match = np.sum((f.control - f.lsq_control) ** 2) / np.sum(f.lsq_control**2)
    ok &= f.report.converged and f.report.final_rse <= 1e-12 and match <= 1e-10
    parts.append(f"curve 1 mFDBK RSE {f.report.final_rse:.1e}, net match {match:.1e}")
    for curve in (1, 2):
        it = {m: fits[curve, m].report.iterations for m in ("mwrk", "mmwrk", "fdbk", "mfdbk")}
        conv = all(fits[curve, m].report.converged for m in it)
        su1, su2 = it["mwrk"] / it["mmwrk"], it["fdbk"] / it["mfdbk"]
        ok &= conv and su1 >= 1.2 and su2 >= 1.2
        parts.append(f"curve {curve} SU1={su1:.2f} SU2={su2:.2f}")
    return ok, ", ".join(parts)


def check_oracles():
    worst_s, worst_x, rank_ok = 0.0, 0.0, True
    for seed in range(100):
        rng = make_rng(10_000 + seed)
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        if seed % 2:
            r = int(rng.integers(1, min(m, n) + 1))
            A = generate(SyntheticSpec("udv", m, n, r=r, kappa=float(rng.uniform(1.5, 10.0)), seed=seed))
        else:
            A = generate(SyntheticSpec("gaussian", m, n, seed=seed))
        M = A.toarray()
        b = rng.standard_normal(m)
        s1, sr, rank = svd_extremes(A)
        o1, or_, orank = svd_extremes_oracle(M.tolist())
        rank_ok &= rank == orank
        worst_s = max(worst_s, abs(s1 - o1) / o1, abs(sr - or_) / or_)
        x = min_norm_solution(A, b)
        xo = np.array(min_norm_oracle(M.tolist(), b.tolist()))
        worst_x = max(worst_x, np.linalg.norm(x - xo) / np.linalg.norm(xo))
    ok = rank_ok and worst_s <= 1e-10 and worst_x <= 1e-10
    return ok, f"100 systems: ranks agree {rank_ok}, max sigma rel {worst_s:.1e}, max x rel {worst_x:.1e}"


CHECKS = [
    (1, "reduction exactness", check_reduction),
    (2, "two-term recurrence", check_recurrence),
    (3, "Pythagorean identity", check_pythagoras),
    (4, "minimum-norm limit", check_min_norm),
    (5, "speed-up bands", check_speedups),
    (6, "parameter sweep", check_sweep),
    (7, "momentum region", check_beta_region),
    (8, "block identities", check_block_identities),
    (9, "B-spline fitting", check_bspline),
    (10, "oracle equivalence", check_oracles),
]


@pytest.mark.parametrize("n,title,fn", CHECKS, ids=[f"AC{n}" for n, _, _ in CHECKS])
def test_acceptance(n, title, fn):
    ok, detail = fn()
    report(n, ok, title, detail)
    assert ok, detail


if __name__ == "__main__":
    warnings.simplefilter("ignore", MomentumBoundWarning)
    failed = 0
    for n, title, fn in CHECKS:
        ok, detail = fn()
        report(n, ok, title, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
