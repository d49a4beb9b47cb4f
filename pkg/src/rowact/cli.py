"""``rowact`` command line: gen, solve, bench, sweep, fit, bounds.

Exit codes: 0 success, 1 usage error, 2 IO error, 3 non-convergence of
``solve --strict``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import bench as bench_mod
from .bspline import evaluate, fit_curve, sample_curve, write_points_csv
from .datagen import SyntheticSpec, consistent_system, generate, min_norm_solution
from .mmio import MatrixMarketError, read_matrix_market, read_vector, write_matrix_market, write_vector
from .solvers import Method, MomentumBoundWarning, SolverConfig, solve
from .theory import beta_upper_bound, bound_report, lemma_pq, momentum_coeffs

EXIT_USAGE, EXIT_IO, EXIT_NOT_CONVERGED = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _methods(text: str) -> list[Method]:
    try:
        return [Method(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


METHOD_CHOICES = [m.value for m in Method]


def _add_solver_flags(p, method_default="mwrk"):
    p.add_argument("--method", choices=METHOD_CHOICES, default=method_default)
    p.add_argument("--alpha", type=float, default=None, help="step size in (0, 2)")
    p.add_argument("--beta", type=float, default=None, help="momentum parameter >= 0")
    p.add_argument("--theta", type=float, default=0.5, help="greedy-set relaxation in [0, 1]")
    p.add_argument("--tol", type=float, default=1e-12, help="tolerance on the squared relative error")
    p.add_argument("--max-iters", type=int, default=100_000)


def _add_matrix_flags(p):
    p.add_argument("--kind", choices=["gaussian", "udv", "identity"], default="udv")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=None, help="defaults to m for identity matrices")
    p.add_argument("--r", type=int, default=None, help="rank (udv); default min(m, n)/10")
    p.add_argument("--kappa", type=float, default=None, help="singular value bound (udv); default min(m, n)/10")


def _matrix_spec(args, seed: int) -> SyntheticSpec:
    n = args.m if args.n is None else args.n
    r = kappa = None
    if args.kind == "udv":
        r0, k0 = bench_mod.default_udv_params(args.m, n)
        r = r0 if args.r is None else args.r
        kappa = k0 if args.kappa is None else args.kappa
    return SyntheticSpec(args.kind, args.m, n, r, kappa, seed)


def _dump_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_rows(out, columns, rows):
    if out:
        bench_mod.write_csv(out, columns, rows)
    else:
        bench_mod.write_csv(sys.stdout, columns, rows)


# ----------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    spec = _matrix_spec(args, args.seed)
    A = generate(spec)
    b, x_star = consistent_system(A)
    os.makedirs(args.out, exist_ok=True)
    paths = {name: os.path.join(args.out, name) for name in ("A.mtx", "b.vec", "xstar.vec")}
    write_matrix_market(paths["A.mtx"], A)
    write_vector(paths["b.vec"], b)
    write_vector(paths["xstar.vec"], x_star)
    _dump_json({"m": A.m, "n": A.n, "kind": spec.kind.value, "r": spec.r,
                "kappa": spec.kappa, "seed": spec.seed, "files": paths}, None)
    return 0


def cmd_solve(args) -> int:
    A = read_matrix_market(args.matrix)
    b = read_vector(args.rhs)
    if args.xstar:
        x_star = read_vector(args.xstar)
    elif args.no_xstar:
        x_star = None
    else:
        x_star = min_norm_solution(A, b)
    cfg = SolverConfig(
        method=args.method, alpha=args.alpha, beta=args.beta, theta=args.theta,
        rse_tol=args.tol, max_iters=args.max_iters, refresh_period=args.refresh,
        record_history=bool(args.history), seed=args.seed,
    )
    rep = solve(A, b, x_star, cfg)
    if args.history:
        rows = [{"k": k, "rse": rse, "selected": s} for k, rse, s in rep.history]
        bench_mod.write_csv(args.history, ["k", "rse", "selected"], rows)
    if args.solution:
        write_vector(args.solution, rep.x)
    out = {"method": cfg.method.value, "alpha": cfg.alpha, "beta": cfg.beta,
           "theta": cfg.theta, "m": A.m, "n": A.n}
    out.update(rep.to_dict(timing=args.timing))
    _dump_json(out, args.out)
    if args.strict and not rep.converged:
        return EXIT_NOT_CONVERGED
    return 0


def _bench_configs(args) -> list[SolverConfig]:
    configs = []
    for method in args.methods:
        momentum = method.baseline is not method
        alpha = args.alpha if momentum else None
        beta = args.beta if momentum else None
        configs.append(SolverConfig(
            method=method, alpha=alpha, beta=beta, theta=args.theta,
            rse_tol=args.tol, max_iters=args.max_iters,
        ))
    return configs


def cmd_bench(args) -> int:
    seeds = [args.seed + i for i in range(args.seeds)]
    spec = bench_mod.BenchSpec(
        matrix=_matrix_spec(args, args.seed), configs=_bench_configs(args),
        seeds=seeds, jobs=args.jobs, timing=args.timing,
    )
    rows = bench_mod.run_bench(spec)
    _write_rows(args.out, bench_mod.BENCH_COLUMNS, rows)
    return 0


def cmd_sweep(args) -> int:
    spec = bench_mod.SweepSpec(
        matrix=_matrix_spec(args, args.seed), method=args.method,
        alphas=args.alphas, betas=args.betas, theta=args.theta,
        rse_tol=args.tol, max_iters=args.max_iters, jobs=args.jobs,
    )
    _write_rows(args.out, bench_mod.SWEEP_COLUMNS, bench_mod.run_sweep(spec))
    return 0


def cmd_fit(args) -> int:
    pts, _ = sample_curve(args.curve, args.m)
    cfg = SolverConfig(
        method=args.method, alpha=args.alpha, beta=args.beta, theta=args.theta,
        rse_tol=args.tol, max_iters=args.max_iters,
    )
    fit = fit_curve(pts, args.n_ctrl, cfg, project_data=not args.raw)
    if args.out:
        write_points_csv(args.out, fit.control)
    if args.samples:
        t = np.linspace(*fit.knots.domain, args.m)
        write_points_csv(args.samples, evaluate(fit.knots, fit.control, t))
    out = {"curve": args.curve, "m": args.m, "n_ctrl": args.n_ctrl,
           "method": cfg.method.value, "alpha": cfg.alpha, "beta": cfg.beta,
           "projected": not args.raw}
    out.update(fit.report.to_dict(timing=args.timing))
    _dump_json(out, args.report)
    return 0


def cmd_bounds(args) -> int:
    if args.matrix:
        A = read_matrix_market(args.matrix)
        beta = 0.0 if args.beta is None else args.beta
        out = bound_report(A, args.alpha, beta).to_dict()
    else:
        if args.rho is None:
            raise UsageError("bounds needs either --matrix or --rho")
        rho = args.rho
        tau1 = 4 + args.alpha - args.alpha * rho
        tau2 = args.alpha * (2 - args.alpha) * rho
        out = {"alpha": args.alpha, "rho": rho, "tau1": tau1, "tau2": tau2,
               "beta_max": beta_upper_bound(args.alpha, rho)}
        if args.beta is not None:
            c = momentum_coeffs(args.alpha, args.beta, rho)
            out.update(beta=args.beta, gamma1=c.gamma1, gamma2=c.gamma2)
            p, q = lemma_pq(c.gamma1, c.gamma2) if c.gamma1 + c.gamma2 < 1 else (None, None)
            out.update(p=p, q=q)
    _dump_json(out, args.out)
    return 0


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rowact", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write a synthetic consistent system")
    _add_matrix_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one solver configuration")
    p.add_argument("--matrix", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--xstar", default=None, help="reference solution; default A^+ b")
    p.add_argument("--no-xstar", action="store_true", help="stop on the relative residual instead")
    _add_solver_flags(p)
    p.add_argument("--refresh", type=int, default=5000, help="residual refresh period")
    p.add_argument("--seed", type=int, default=0, help="sketch seed for --method eta")
    p.add_argument("--history", default=None, help="CSV of (k, rse, selected)")
    p.add_argument("--solution", default=None, help="write the final iterate here")
    p.add_argument("--out", default=None, help="report JSON (default stdout)")
    p.add_argument("--strict", action="store_true", help="exit 3 unless converged")
    p.add_argument("--timing", action="store_true", help="include wall-clock time")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="median iteration counts and speed-ups over seeds")
    _add_matrix_flags(p)
    p.add_argument("--methods", type=_methods, default=_methods("mwrk,mmwrk,fdbk,mfdbk"))
    p.add_argument("--alpha", type=float, default=None, help="override for the momentum methods")
    p.add_argument("--beta", type=float, default=None, help="override for the momentum methods")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="iteration counts over an (alpha, beta) grid")
    _add_matrix_flags(p)
    p.add_argument("--method", choices=METHOD_CHOICES, default="mmwrk")
    p.add_argument("--alphas", type=_floats, default=_floats("0.25,0.5,0.75,1,1.25"))
    p.add_argument("--betas", type=_floats, default=_floats("0,0.25,0.5,0.75"))
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit a cubic B-spline to a sampled test curve")
    p.add_argument("--curve", type=int, choices=[1, 2], default=1)
    p.add_argument("--m", type=int, default=2000, help="number of samples")
    p.add_argument("--n-ctrl", type=int, default=100, help="number of control points")
    _add_solver_flags(p, method_default="mfdbk")
    p.add_argument("--raw", action="store_true", help="iterate on the raw samples instead of their projection")
    p.add_argument("--out", default=None, help="control-net CSV")
    p.add_argument("--samples", default=None, help="CSV of the fitted curve at m parameters")
    p.add_argument("--report", default=None, help="report JSON (default stdout)")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="momentum bounds and convergence factors")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--matrix", default=None, help="compute rho and the factors from this matrix")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already printed
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MomentumBoundWarning)
            return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, MatrixMarketError) as exc:
        print(f"rowact: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"rowact: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
