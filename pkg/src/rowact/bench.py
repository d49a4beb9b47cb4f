"""Benchmark and parameter-sweep harness.

Each benchmark cell generates one synthetic matrix, builds the consistent
right-hand side ``b = A x*`` with ``x* = A^+ e``, and runs every configured
method on it. Results are one row per (method, seed) plus a MEDIAN row per
method, with speed-ups taken between median iteration counts.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .datagen import SyntheticSpec, consistent_system, generate
from .solvers import Method, MomentumBoundWarning, SolverConfig, solve

BENCH_COLUMNS = [
    "method", "alpha", "beta", "m", "n", "r", "kappa", "seed",
    "iters", "converged", "final_rse", "wall_ms", "speedup",
]
SWEEP_COLUMNS = ["alpha", "beta", "iters", "converged", "final_rse"]


def fmt(v) -> str:
    """CSV cell text: 17 significant digits for reals, plain text otherwise."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path_or_file, columns, rows) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def default_udv_params(m: int, n: int) -> tuple[int, float]:
    """Rank and condition bound scaled as ``min(m, n) / 10``."""
    base = min(m, n) / 10
    return max(1, int(base + 0.5)), max(base, 2.0)


@dataclass
class BenchSpec:
    matrix: SyntheticSpec
    configs: list[SolverConfig]
    seeds: list[int]
    jobs: int = 1
    timing: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("a benchmark needs at least one seed")
        if not self.configs:
            raise ValueError("a benchmark needs at least one method")


@dataclass
class SweepSpec:
    matrix: SyntheticSpec
    method: Method
    alphas: list[float]
    betas: list[float]
    theta: float = 0.5
    rse_tol: float = 1e-12
    max_iters: int = 100_000
    jobs: int = 1

    def __post_init__(self):
        self.method = Method(self.method)
        if not self.alphas or not self.betas:
            raise ValueError("sweep grids must be nonempty")
        for a in self.alphas:
            if not 0 < a < 2:
                raise ValueError(f"alpha grid value {a} outside (0, 2)")
        for b in self.betas:
            if b < 0:
                raise ValueError(f"beta grid value {b} is negative")


def _problem(spec: SyntheticSpec):
    A = generate(spec)
    b, x_star = consistent_system(A)
    return A, b, x_star


def _bench_cell(spec: BenchSpec, seed: int) -> list[dict]:
    mspec = replace(spec.matrix, seed=seed)
    A, b, x_star = _problem(mspec)
    rows = []
    for cfg in spec.configs:
        rep = solve(A, b, x_star, cfg)
        rows.append({
            "method": cfg.method.value, "alpha": cfg.alpha, "beta": cfg.beta,
            "m": mspec.m, "n": mspec.n, "r": mspec.r, "kappa": mspec.kappa, "seed": seed,
            "iters": rep.iterations, "converged": rep.converged, "final_rse": rep.final_rse,
            "wall_ms": rep.wall_time * 1e3 if spec.timing else None, "speedup": None,
        })
    return rows


def _pool_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_bench(spec: BenchSpec) -> list[dict]:
    """All per-seed rows followed by the MEDIAN rows, in configuration order."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MomentumBoundWarning)
        cells = _pool_map(lambda s: _bench_cell(spec, s), spec.seeds, spec.jobs)
    rows = [row for cell in cells for row in cell]
    medians = []
    for j, cfg in enumerate(spec.configs):
        mine = [cell[j] for cell in cells]
        med = dict(mine[0])
        med["seed"] = "MEDIAN"
        med["iters"] = float(np.median([r["iters"] for r in mine]))
        med["converged"] = all(r["converged"] for r in mine)
        med["final_rse"] = float(np.median([r["final_rse"] for r in mine]))
        if spec.timing:
            med["wall_ms"] = float(np.median([r["wall_ms"] for r in mine]))
        medians.append(med)
    for j, cfg in enumerate(spec.configs):
        base = cfg.method.baseline
        if base is cfg.method:
            continue
        for i, other in enumerate(spec.configs):
            if other.method is base:
                medians[j]["speedup"] = medians[i]["iters"] / medians[j]["iters"]
                break
    return rows + medians


def median_iters(rows: list[dict], method: str) -> float:
    for r in rows:
        if r["seed"] == "MEDIAN" and r["method"] == method:
            return r["iters"]
    raise KeyError(method)


def speedup(rows: list[dict], method: str) -> float:
    for r in rows:
        if r["seed"] == "MEDIAN" and r["method"] == method:
            return r["speedup"]
    raise KeyError(method)


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Evaluate the full ``alpha x beta`` grid on one shared problem."""
    A, b, x_star = _problem(spec.matrix)
    cells = [(a, be) for a in spec.alphas for be in spec.betas]

    def run(cell):
        a, be = cell
        cfg = SolverConfig(
            method=spec.method, alpha=a, beta=be, theta=spec.theta,
            rse_tol=spec.rse_tol, max_iters=spec.max_iters,
        )
        rep = solve(A, b, x_star, cfg)
        return {"alpha": a, "beta": be, "iters": rep.iterations,
                "converged": rep.converged, "final_rse": rep.final_rse}

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MomentumBoundWarning)
        return _pool_map(run, cells, spec.jobs)
