"""Command-line front end: ``lcqp solve|gen|bench|verify``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from .certificates import verify_strong_stationarity
from .io import (ProblemFileError, dump_record, read_problem, read_solution,
                 result_record, serialize_problem)
from .model import validate
from .solver import LcqpSolver, SolverOptions, SolverStatus

EXIT_CODES = {
    SolverStatus.SOLVED: 0,
    SolverStatus.MAX_PENALTY_REACHED: 2,
    SolverStatus.MAX_ITERATIONS_REACHED: 3,
    SolverStatus.SUBPROBLEM_FAILURE: 4,
}
EXIT_INPUT_ERROR = 1

# flag -> SolverOptions field
OPTION_FLAGS = {
    "stat_tol": "stationarity_tolerance",
    "comp_tol": "complementarity_tolerance",
    "rho0": "initial_penalty_parameter",
    "beta": "penalty_update_factor",
    "zero_penalty_first": "solve_zero_penalty_first",
    "max_iter": "max_iterations",
    "max_penalty": "max_penalty_parameter",
    "print_level": "print_level",
    "n_dynamic": "n_dynamic_penalty",
    "eta_dynamic": "eta_dynamic_penalty",
    "perturb_scale": "perturbation_scale",
    "seed": "rng_seed",
}


def _add_option_flags(p: argparse.ArgumentParser, print_default=None):
    g = p.add_argument_group("solver options")
    g.add_argument("--stat-tol", type=float)
    g.add_argument("--comp-tol", type=float)
    g.add_argument("--rho0", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--zero-penalty-first", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--max-penalty", type=float)
    g.add_argument("--print-level", type=int, choices=(0, 1, 2), default=print_default)
    g.add_argument("--n-dynamic", type=int)
    g.add_argument("--eta-dynamic", type=float)
    g.add_argument("--perturb-scale", type=float)
    g.add_argument("--seed", type=int, help="RNG seed (fallback: $LCQP_SEED, then 0)")


def options_from_args(args) -> SolverOptions:
    kw = {}
    for flag, field_name in OPTION_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            kw[field_name] = val
    if "rng_seed" not in kw and os.environ.get("LCQP_SEED"):
        kw["rng_seed"] = int(os.environ["LCQP_SEED"])
    return SolverOptions(**kw)


def _err(msg):
    print(f"lcqp: {msg}", file=sys.stderr)


# -- solve -------------------------------------------------------------------


def cmd_solve(args) -> int:
    try:
        problem = read_problem(args.problem)
    except (OSError, ProblemFileError) as exc:
        _err(f"{args.problem}: {exc}")
        return EXIT_INPUT_ERROR
    issues = validate(problem)
    if issues:
        _err(f"{args.problem}: invalid problem: " + "; ".join(issues))
        return EXIT_INPUT_ERROR
    try:
        opts = options_from_args(args)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    solver = LcqpSolver(problem, opts, stream=sys.stderr)
    sol = solver.solve()
    rec = result_record(problem, sol, include_solution=args.emit_solution,
                        include_time=not args.no_time)
    print(dump_record(rec))
    if args.output:
        Path(args.output).write_text(json.dumps(result_record(problem, sol, True)) + "\n")
    return EXIT_CODES[sol.status]


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    try:
        if args.family == "toy":
            problem = bm.gen_toy()
        elif args.family == "ivocp":
            problem = bm.gen_ivocp(bm.IvocpSpec(N=args.N, x0_guess=args.x0, T=args.T))
        elif args.family == "masses":
            problem = bm.gen_moving_masses(bm.MovingMassesSpec(s=args.s, N=args.N, T=args.T))
        elif args.family == "intqp":
            problem = bm.gen_integer_qp(bm.IntegerQpSpec(
                bits=args.bits, target=args.target, weight=args.weight, regularize=args.regularize))
        else:
            problem = bm.gen_random(args.seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    text = serialize_problem(problem)
    if args.output and args.output != "-":
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- bench -------------------------------------------------------------------

# solver variants compared in the profile
VARIANTS = {
    "zero-penalty-start": dict(solve_zero_penalty_first=True),
    "guess-start": dict(solve_zero_penalty_first=False),
}


def suite_grid(suite):
    """List of ``(label, params, problem factory)`` for a benchmark suite."""
    Ns = range(50, 101, 5)
    runs = []
    if suite == "ivocp":
        for N in Ns:
            for x0 in np.linspace(-1.9, -0.9, 10):
                spec = bm.IvocpSpec(N=N, x0_guess=float(x0))
                runs.append((f"ivocp-N{N}-x{x0:.4f}", {"N": N, "x0_guess": float(x0)}, spec))
    elif suite == "masses":
        for N in Ns:
            for T in np.linspace(2.0, 4.0, 10):
                spec = bm.MovingMassesSpec(s=2, N=N, T=float(T))
                runs.append((f"masses-N{N}-T{T:.4f}", {"N": N, "T": float(T)}, spec))
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return runs


def _run_one(spec, variant_opts, base_opts):
    problem = bm.gen_ivocp(spec) if isinstance(spec, bm.IvocpSpec) else bm.gen_moving_masses(spec)
    opts = SolverOptions(**{**base_opts.__dict__, **variant_opts, "print_level": 0})
    solver = LcqpSolver(problem, opts)
    t0 = time.perf_counter()
    sol = solver.solve()
    elapsed = time.perf_counter() - t0
    return problem, sol, elapsed


def cmd_bench(args) -> int:
    try:
        runs = suite_grid(args.suite)
        base = options_from_args(args)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    if args.limit is not None:
        runs = runs[:args.limit]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(label, params, spec, name, vopts)
            for label, params, spec in runs for name, vopts in VARIANTS.items()]

    def work(job):
        label, params, spec, name, vopts = job
        problem, sol, elapsed = _run_one(spec, vopts, base)
        return label, params, name, problem, sol, elapsed

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as ex:
            results = list(ex.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    scan_cache = {}
    times = {}
    with open(out / f"{args.suite}_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["problem", *runs[0][1].keys(), "solver", "status", "objective", "phi",
                  "iterations", "time"]
        if args.suite == "ivocp":
            header.append("scan_objective")
        w.writerow(header)
        for label, params, name, problem, sol, elapsed in results:
            row = [label, *params.values(), name, sol.status.value,
                   repr(float(sol.objective + problem.obj_const)), repr(float(sol.phi)),
                   sol.inner_iterations, repr(elapsed)]
            if args.suite == "ivocp":
                N = params["N"]
                if N not in scan_cache:
                    scan_cache[N] = bm.ivocp_scan(N)[1]
                row.append(repr(scan_cache[N]))
            w.writerow(row)
            times[(label, name)] = elapsed if sol.solved else np.inf
            if args.print_level:
                print(f"{label} {name}: {sol.status.value} {elapsed:.3f}s", file=sys.stderr)

    labels = [r[0] for r in runs]
    names = list(VARIANTS)
    table = bm.ProfileTable(labels, names, [[times[(lab, s)] for s in names] for lab in labels])
    taus = np.unique(np.concatenate([[1.0], np.geomspace(1.0, 100.0, 61)]))
    bm.write_profile_csv(out / f"{args.suite}_profile.csv", table, taus)
    print(json.dumps({"suite": args.suite, "runs": len(results),
                      "solved": int(sum(r[4].solved for r in results)),
                      "output": str(out)}))
    return 0


# -- verify ------------------------------------------------------------------


def cmd_verify(args) -> int:
    try:
        problem = read_problem(args.problem)
        rec = read_solution(args.solution)
    except (OSError, ProblemFileError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    try:
        ok, res = verify_strong_stationarity(
            problem, np.array(rec["x"]), np.array(rec["y_A"]), np.array(rec["y_L"]),
            np.array(rec["y_R"]), np.array(rec["y_x"]) if "y_x" in rec else None, tol=args.tol)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT_ERROR
    print(json.dumps({"strongly_stationary": bool(ok), **res}))
    return 0 if ok else 5


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcqp", description="LCQP penalty homotopy solver")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a problem file")
    ps.add_argument("problem")
    ps.add_argument("--emit-solution", action="store_true", help="include x and duals in the record")
    ps.add_argument("--output", "-o", help="also write the full record (with x and duals) here")
    ps.add_argument("--no-time", action="store_true", help="omit wall time from the record")
    _add_option_flags(ps)
    ps.set_defaults(func=cmd_solve)

    pg = sub.add_parser("gen", help="write a benchmark problem file")
    pg.add_argument("family", choices=("toy", "ivocp", "masses", "intqp", "random"))
    pg.add_argument("--N", type=int, default=50)
    pg.add_argument("--x0", type=float, default=-1.9)
    pg.add_argument("--s", type=int, default=2)
    pg.add_argument("--T", type=float, default=2.0)
    pg.add_argument("--bits", type=int, default=3)
    pg.add_argument("--target", type=float, default=2.3)
    pg.add_argument("--weight", type=float, default=1.0)
    pg.add_argument("--regularize", action="store_true")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--output", "-o")
    pg.set_defaults(func=cmd_gen)

    pb = sub.add_parser("bench", help="run a benchmark sweep and write CSV files")
    pb.add_argument("suite", choices=("ivocp", "masses"))
    pb.add_argument("--output", "-o", default="bench-out")
    pb.add_argument("--jobs", type=int, default=1,
                    help="worker threads; parallel runs add timing noise")
    pb.add_argument("--limit", type=int, help="run only the first LIMIT grid points")
    _add_option_flags(pb, print_default=0)
    pb.set_defaults(func=cmd_bench)

    pv = sub.add_parser("verify", help="check strong stationarity of a solution record")
    pv.add_argument("problem")
    pv.add_argument("solution")
    pv.add_argument("--tol", type=float, default=1e-8)
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
