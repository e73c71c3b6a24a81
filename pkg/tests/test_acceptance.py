"""Acceptance criteria, one test per criterion.

Every test records a ``criterion N: PASS|FAIL`` line that is printed in the
terminal summary (and immediately, when run with ``-s``).
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lcqp import benchmarks as bm
from lcqp.certificates import (branch_enumerate, penalty_bound, switch_duals,
                               verify_strong_stationarity)
from lcqp.model import EPS
from lcqp.solver import IterateState, LcqpSolver, SolverOptions, SolverStatus, solve
from oracles import merit_line_minimizer

STAT_TOL = 1e6 * EPS
COMP_TOL = 1e3 * EPS


def report(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    return ok


# -- shared runs ------------------------------------------------------------


@pytest.fixture(scope="module")
def toy_run():
    pb = bm.gen_toy()
    solve(pb, print_level=0)  # warm up imports and caches
    t0 = time.perf_counter()
    sol = solve(pb, print_level=0, record_trace=True)
    elapsed = time.perf_counter() - t0
    return pb, sol, elapsed


@pytest.fixture(scope="module")
def random_runs():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    runs = []
    for _ in range(200):
        pb = bm.gen_random(rng)
        sol = solve(pb, print_level=0, record_trace=True)
        oracle = branch_enumerate(pb)
        runs.append((pb, sol, oracle))
    return runs, time.perf_counter() - t0


# -- 1 ----------------------------------------------------------------------


def test_criterion_01_toy(toy_run):
    pb, sol, elapsed = toy_run
    corner = min(np.max(np.abs(sol.x - c)) for c in ([1.0, 0.0], [0.0, 1.0]))
    ok_on = (sol.status is SolverStatus.SOLVED
             and abs(sol.objective + pb.obj_const - 1.0) <= 1e-8
             and corner <= 1e-6 and sol.phi <= COMP_TOL)

    off = solve(pb, print_level=0, perturbation_scale=0.0)
    saddle = max(np.max(np.abs(rec.x - 2.0 / (2.0 + rec.rho))) for rec in off.history)
    near_origin = np.max(np.abs(off.x)) <= 1e-3
    ok_off = (off.status is SolverStatus.MAX_PENALTY_REACHED or near_origin) and saddle <= 1e-4
    ok = ok_on and ok_off and elapsed < 0.1
    report(1, ok, f"objective {sol.objective + pb.obj_const:.12f}, corner distance {corner:.1e}, "
                  f"phi {sol.phi:.1e}; unperturbed: {off.status.value}, saddle deviation "
                  f"{saddle:.1e}; time {elapsed * 1e3:.1f} ms")
    assert ok


# -- 2 ----------------------------------------------------------------------


def test_criterion_02_oracle_equivalence(random_runs):
    runs, elapsed = random_runs
    solved = cert_fail = dom_fail = global_hits = 0
    for pb, sol, oracle in runs:
        if not sol.solved:
            continue
        solved += 1
        ok, _ = verify_strong_stationarity(pb, sol.x, sol.y_A, sol.y_L, sol.y_R, sol.y_x,
                                           tol=10 * STAT_TOL)
        cert_fail += not ok
        dom_fail += sol.objective < oracle.objective - 1e-8
        global_hits += sol.objective <= oracle.objective + 1e-6 * (1 + abs(oracle.objective))
    ok = cert_fail == 0 and dom_fail == 0 and elapsed < 30
    report(2, ok, f"{solved}/200 solved, {cert_fail} certificate failures, {dom_fail} below the "
                  f"oracle, global optimum on {global_hits}/{solved} ({global_hits / solved:.1%}); "
                  f"time {elapsed:.1f} s")
    assert ok


# -- 3 ----------------------------------------------------------------------


def test_criterion_03_step_length(toy_run, random_runs):
    worst = 0.0
    full_steps = checked = full_fail = 0
    problems = [(toy_run[0], toy_run[1])] + [(pb, sol) for pb, sol, _ in random_runs[0]]
    for pb, sol in problems:
        pen = pb.penalty_structure()
        for st in sol.trace:
            p = st.p
            if not np.any(p):
                continue
            if st.pCp <= 0:
                full_steps += 1
                full_fail += st.alpha != 1.0
                continue
            ref = merit_line_minimizer(pb.Q, pen.C, st.rho, st.g_lin, st.x, p)
            worst = max(worst, abs(st.alpha - ref))
            checked += 1
    ok = worst <= 1e-8 and full_fail == 0
    report(3, ok, f"{checked} line searches, max |alpha - reference| {worst:.1e}; "
                  f"{full_steps} steps with p'Cp <= 0, {full_fail} not equal to 1")
    assert ok


# -- 4 ----------------------------------------------------------------------


def test_criterion_04_descent(random_runs):
    worst_pos = -np.inf
    strict_fail = steps = 0
    for _, sol, _ in random_runs[0]:
        for st in sol.trace:
            p = st.p
            steps += 1
            worst_pos = max(worst_pos, st.grad_dot_p)
            if np.max(np.abs(p)) > 1e-8 and st.grad_dot_p > -1e-14 * (p @ p):
                strict_fail += 1
    ok = worst_pos <= 1e-12 and strict_fail == 0
    report(4, ok, f"{steps} steps, max directional derivative {worst_pos:.1e}, "
                  f"{strict_fail} steps without strict descent")
    assert ok


# -- 5 ----------------------------------------------------------------------


def test_criterion_05_one_step_convergence():
    pb = bm.gen_toy()
    bound = penalty_bound(pb, [1.0, 0.0], [0.0], [-2.0])
    rho = 2.0 * bound
    s = LcqpSolver(pb, SolverOptions(print_level=0, perturbation_scale=0.0))
    x = np.array([0.5, 0.0])
    s.ws.warm_start(x)
    state = IterateState(x=x, y=np.zeros(s.stacked.m), rho=rho, rng=np.random.default_rng(0))
    res = s.inner_step(state)
    alpha = s.step_length(x, res.x, rho)
    x_new = x + alpha * (res.x - x)
    err = np.max(np.abs(x_new - [1.0, 0.0]))
    ok = rho == 6.0 and err <= 1e-10 and alpha == 1.0
    report(5, ok, f"rho {rho:g}, alpha {alpha:g}, distance to (1,0) {err:.1e}")
    assert ok


# -- 6 ----------------------------------------------------------------------


def certified_points(count, seed=6):
    """Strongly stationary branch optima of random instances."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        pb = bm.gen_random(rng)
        for br in branch_enumerate(pb).branches:
            if br.x is None:
                continue
            ok, _ = verify_strong_stationarity(pb, br.x, br.y_A, br.y_L, br.y_R, br.y_x, tol=1e-9)
            if ok:
                out.append((pb, br))
                break
    return out


def test_criterion_06_dual_switch_round_trip():
    worst_stat = worst_back = worst_sign = 0.0
    points = certified_points(50)
    for pb, br in points:
        rho = penalty_bound(pb, br.x, br.y_L, br.y_R)
        y_A, y_L, y_R = switch_duals(pb, br.x, br.y_A, br.y_L, br.y_R, rho)
        y = np.concatenate([y_L, y_R, y_A, br.y_x])
        s = LcqpSolver(pb, SolverOptions(print_level=0))
        worst_stat = max(worst_stat, s.stationarity_residual(br.x, y, rho))
        st = s.stacked
        Ax = st.A @ br.x
        at_lb = np.abs(Ax - st.lb) <= 1e3 * EPS * (1 + np.abs(st.lb))
        at_ub = np.abs(Ax - st.ub) <= 1e3 * EPS * (1 + np.abs(st.ub))
        worst_sign = max(worst_sign, float(np.max(-y[at_lb & ~at_ub], initial=0.0)))
        back = s.translate_duals(br.x, y, rho)
        worst_back = max(worst_back, np.max(np.abs(back[1] - br.y_L), initial=0.0),
                         np.max(np.abs(back[2] - br.y_R), initial=0.0),
                         np.max(np.abs(back[0] - br.y_A), initial=0.0))
    ok = len(points) == 50 and worst_stat <= 1e-8 and worst_back <= 1e-10
    report(6, ok, f"{len(points)} certified points, penalized stationarity {worst_stat:.1e}, "
                  f"inverse map error {worst_back:.1e}, lower-bound dual sign violation "
                  f"{worst_sign:.1e}")
    assert ok


# -- 7 ----------------------------------------------------------------------


def test_criterion_07_ivocp():
    t0 = time.perf_counter()
    worst_rel = worst_phi = 0.0
    failures = []
    for N in (50, 100):
        _, f_scan = bm.ivocp_scan(N)
        for x0 in np.linspace(-1.9, -0.9, 10):
            pb = bm.gen_ivocp(N=N, x0_guess=float(x0))
            sol = solve(pb, print_level=0, solve_zero_penalty_first=False)
            f = sol.objective + pb.obj_const
            worst_rel = max(worst_rel, abs(f - f_scan) / abs(f_scan))
            worst_phi = max(worst_phi, sol.phi)
            if not sol.solved or sol.phi > COMP_TOL:
                failures.append((N, float(x0), sol.status.value))
    elapsed = time.perf_counter() - t0
    ok = not failures and worst_rel <= 1e-4 and elapsed < 60
    report(7, ok, f"20 runs, {len(failures)} not converged, max phi {worst_phi:.1e}, "
                  f"max relative gap to scan {worst_rel:.1e}; time {elapsed:.1f} s")
    assert ok


# -- 8 ----------------------------------------------------------------------


def test_criterion_08_moving_masses():
    spec = bm.MovingMassesSpec(s=2, N=50, T=2.0)
    sol = solve(bm.gen_moving_masses(spec), print_level=0)
    res = bm.masses_residuals(spec, sol.x)
    ok = (sol.solved and res["terminal"] <= 1e-6 and sol.phi <= COMP_TOL
          and res["dynamics"] <= 1e-8)
    report(8, ok, f"{sol.status.value}, terminal {res['terminal']:.1e}, phi {sol.phi:.1e}, "
                  f"implicit Euler defect {res['dynamics']:.1e}")
    assert ok


# -- 9 ----------------------------------------------------------------------


def test_criterion_09_integer_encoding():
    rng = np.random.default_rng(0)
    matches = binary_fail = curvature_fail = 0
    cases = []
    for _ in range(20):
        bits = int(rng.integers(1, 7))
        target = float(rng.uniform(0, 2 ** bits - 1))
        pb = bm.gen_integer_qp(bits=bits, target=target)
        sol = solve(pb, print_level=0, record_trace=True)
        b = sol.x[1:]
        binary_fail += not np.all(np.minimum(np.abs(b), np.abs(b - 1)) <= 1e-9)
        C = pb.penalty_structure().C
        curvature_fail += any(st.p @ C @ st.p > 0 for st in sol.trace)
        z_best, f_best = bm.integer_qp_enumerate(bits, target)
        f = sol.objective + pb.obj_const
        hit = f <= f_best + 1e-6
        matches += hit
        cases.append(f"{bits}b/{target:.2f}->{sol.x[0]:.0f}{'' if hit else f'(best {z_best})'}")
    rate = matches / 20
    ok = binary_fail == 0 and curvature_fail == 0 and rate >= 0.8
    report(9, ok, f"{binary_fail} non-binary, {curvature_fail} runs with p'Cp > 0, global match "
                  f"{matches}/20 ({rate:.0%}, gate 80%)")
    print("  " + ", ".join(cases))
    assert ok


# -- 10 ---------------------------------------------------------------------


def table_row(problems):
    dims = np.array([(p.n, p.n_A, p.n_c) for p in problems])
    return [(int(lo), int(hi), int(round(m)))
            for lo, hi, m in zip(dims.min(0), dims.max(0), dims.mean(0))]


def test_criterion_10_dimension_table():
    Ns = range(50, 101, 5)
    ivocp = table_row([bm.gen_ivocp(N=N) for N in Ns])
    masses = table_row([bm.gen_moving_masses(s=2, N=N) for N in Ns])
    # (min, max, mean) of n, n_A and n_c
    expected_ivocp = [(151, 301, 226), (50, 100, 75), (100, 200, 150)]
    expected_masses = [(554, 1104, 829), (304, 604, 454), (200, 400, 300)]
    ok = ivocp == expected_ivocp and masses == expected_masses
    report(10, ok, f"IVOCP {ivocp}, Moving Masses {masses}")
    assert ok


# -- 11 ---------------------------------------------------------------------


def test_criterion_11_performance_profile():
    one = bm.ProfileTable(["p"], ["a", "b", "c"], [[2.0, 1.0, 4.0]])
    P1 = bm.performance_profile(one, [1.0, 2.0])
    two = bm.ProfileTable(["p", "q"], ["a", "b", "c"], [[2.0, 1.0, 4.0], [1.0, 2.0, np.inf]])
    r2 = two.ratios()
    P2 = bm.performance_profile(two, [1.0, 2.0, 4.0, 1e12])
    ok = (one.ratios().tolist() == [[2.0, 1.0, 4.0]]
          and [P1[s].tolist() for s in "abc"] == [[0.0, 1.0], [1.0, 1.0], [0.0, 0.0]]
          and r2.tolist() == [[2.0, 1.0, 4.0], [1.0, 2.0, np.inf]]
          and P2["a"].tolist() == [0.5, 1.0, 1.0, 1.0]
          and P2["b"].tolist() == [0.5, 1.0, 1.0, 1.0]
          and P2["c"].tolist() == [0.0, 0.0, 0.5, 0.5])
    report(11, ok, "ratios (2,1,4) and curves P(1)=(0,1,0), P(2)=(1,1,0); failed run never counted")
    assert ok
