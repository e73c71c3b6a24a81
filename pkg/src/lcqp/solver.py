"""Penalty homotopy with sequential convex programming for LCQPs.

The outer loop raises the penalty parameter ``rho`` geometrically. For fixed
``rho`` the inner loop linearizes the complementarity penalty at the current
iterate, solves the resulting convex QP (same Hessian ``Q`` every time, so one
warm-started workspace serves the whole run) and moves along the step with
the exact minimizer of the penalized objective.
"""

from __future__ import annotations

import sys
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._exact import exact_slope
from .model import EPS, LcqpProblem, validate
from .qp import QpSolution, QpWorkspace, _operator


class SolverStatus(str, Enum):
    SOLVED = "solved"
    MAX_PENALTY_REACHED = "maxPenaltyReached"
    MAX_ITERATIONS_REACHED = "maxIterationsReached"
    SUBPROBLEM_FAILURE = "subproblemFailure"


@dataclass
class SolverOptions:
    """User options. Defaults follow the reference solver's option table.

    ``perturbation_scale`` sets the size of the random gradient perturbation
    relative to ``1 + |g_k|_inf``; zero disables it.
    """

    stationarity_tolerance: float = 1e6 * EPS
    complementarity_tolerance: float = 1e3 * EPS
    initial_penalty_parameter: float = 1e-2
    penalty_update_factor: float = 2.0
    solve_zero_penalty_first: bool = True
    max_iterations: int = 1000
    max_penalty_parameter: float = 1e4
    print_level: int = 2
    n_dynamic_penalty: int = 3
    eta_dynamic_penalty: float = 0.9
    perturbation_scale: float = 1e2 * EPS
    rng_seed: int = 0
    qp_tolerance: float = 1e-10
    record_trace: bool = False

    def __post_init__(self):
        positive = ("stationarity_tolerance", "complementarity_tolerance",
                    "initial_penalty_parameter", "max_penalty_parameter", "qp_tolerance")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.penalty_update_factor > 1:
            raise ValueError("penalty_update_factor must be greater than 1")
        if not 0 < self.eta_dynamic_penalty < 1:
            raise ValueError("eta_dynamic_penalty must lie in (0, 1)")
        if self.print_level not in (0, 1, 2):
            raise ValueError("print_level must be 0, 1 or 2")
        if self.max_iterations < 0 or self.n_dynamic_penalty < 0:
            raise ValueError("iteration counts must be nonnegative")
        if self.perturbation_scale < 0:
            raise ValueError("perturbation_scale must be nonnegative")


@dataclass
class StepRecord:
    """One inner iteration, kept when ``record_trace`` is on."""

    k: int
    j: int
    rho: float
    x: np.ndarray
    x_star: np.ndarray
    g_lin: np.ndarray
    alpha: float
    grad_dot_p: float
    pCp: float
    phi: float
    stationarity: float

    @property
    def p(self):
        return self.x_star - self.x


@dataclass
class OuterRecord:
    """State at the end of one inner loop."""

    k: int
    rho: float
    x: np.ndarray
    phi: float
    stationarity: float
    inner_iterations: int
    dynamic_break: bool


@dataclass
class IterateState:
    x: np.ndarray
    y: np.ndarray
    rho: float
    rng: np.random.Generator
    k: int = 0
    j: int = 0
    phi_history: deque = field(default_factory=deque)
    total_iterations: int = 0


@dataclass
class Solution:
    status: SolverStatus
    x: np.ndarray
    y_A: np.ndarray
    y_L: np.ndarray
    y_R: np.ndarray
    y_x: np.ndarray
    objective: float
    phi: float
    stationarity: float
    rho: float
    outer_iterations: int
    inner_iterations: int
    qp_changes: int
    wall_time: float
    y_penalized: np.ndarray
    history: list[OuterRecord] = field(default_factory=list)
    trace: list[StepRecord] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status is SolverStatus.SOLVED


def dynamic_penalty_triggered(phi, history, eps_phi, eta, n=None) -> bool:
    """Whether the complementarity violation stalls inside an inner loop.

    True iff ``phi > eps_phi`` and ``phi > eta * max(history[-n:])``. An empty
    history or ``n == 0`` never triggers.
    """
    hist = list(history)
    if n is not None:
        if n <= 0:
            return False
        hist = hist[-n:]
    if not hist:
        return False
    return phi > eps_phi and phi > eta * max(hist)


class LcqpSolver:
    """Solver bound to one problem; holds the QP workspace between calls."""

    def __init__(self, problem: LcqpProblem, options: SolverOptions | None = None, stream=None):
        issues = validate(problem, check_pd=False)
        if issues:
            raise ValueError("invalid problem: " + "; ".join(issues))
        self.problem = problem
        self.options = options or SolverOptions()
        self.stream = stream if stream is not None else sys.stderr
        self.pen = problem.penalty_structure()
        self.stacked = problem.stacked()
        self._abs_Q = _operator(np.abs(problem.Q))
        self._abs_C = _operator(np.abs(self.pen.C))
        self.ws = QpWorkspace(problem.Q, self.stacked.A, self.stacked.lb, self.stacked.ub,
                              tol=self.options.qp_tolerance)

    # -- building blocks --------------------------------------------------

    def linear_term(self, rho):
        return self.problem.g + rho * self.pen.g_phi

    def merit_gradient(self, x, rho, g_lin=None):
        if g_lin is None:
            g_lin = self.linear_term(rho)
        return self.problem.Q @ x + rho * (self.pen.C @ x) + g_lin

    def perturb_gradient(self, state: IterateState, g_k):
        scale = self.options.perturbation_scale
        if scale == 0:
            return g_k
        delta = scale * (1.0 + np.max(np.abs(g_k), initial=0.0))
        return g_k + delta * state.rng.uniform(-1.0, 1.0, size=g_k.shape)

    def inner_step(self, state: IterateState, g_lin=None) -> QpSolution:
        """Solve the convex subproblem linearized at ``state.x``."""
        if g_lin is None:
            g_lin = self.linear_term(state.rho)
        return self.ws.solve(g_lin + state.rho * (self.pen.C @ state.x))

    def step_length(self, x, x_star, rho, g_lin=None) -> float:
        """Exact minimizer over ``[0, 1]`` of the merit along ``x_star - x``."""
        p = x_star - x
        if not np.any(p):
            return 1.0
        pCp = p @ self.pen.C @ p
        if pCp <= 0:
            return 1.0
        slope = self.directional_derivative(x, p, rho, g_lin)
        curv = p @ self.problem.Q @ p + rho * pCp
        return float(np.clip(-slope / curv, 0.0, 1.0))

    def directional_derivative(self, x, p, rho, g_lin=None) -> float:
        """Merit slope along ``p``; recomputed exactly when rounding swamps it."""
        if g_lin is None:
            g_lin = self.linear_term(rho)
        slope = float(self.merit_gradient(x, rho, g_lin) @ p)
        ax = np.abs(x)
        mag = np.abs(p) @ (self._abs_Q @ ax + rho * (self._abs_C @ ax) + np.abs(g_lin))
        if abs(slope) <= 1e9 * EPS * x.size * mag:
            slope = exact_slope(self.problem.Q, self.pen.C, rho, g_lin, x, p)
        return slope

    def stationarity_residual(self, x, y, rho, g_lin=None) -> float:
        r = self.merit_gradient(x, rho, g_lin) - self.stacked.A.T @ y
        return float(np.max(np.abs(r), initial=0.0))

    def activity_tolerance(self, bounds):
        return 1e3 * EPS * (1.0 + np.abs(bounds))

    def translate_duals(self, x, y, rho):
        """Map penalized-problem duals to duals of the original LCQP.

        Returns ``(y_A, y_L, y_R, y_x)``.
        """
        pb = self.problem
        y_L, y_R, y_A, y_x = (v.copy() for v in self.stacked.split(y))
        sL = pb.L @ x - pb.lb_L
        sR = pb.R @ x - pb.lb_R
        L_act = np.abs(sL) <= self.activity_tolerance(pb.lb_L)
        R_act = np.abs(sR) <= self.activity_tolerance(pb.lb_R)
        y_L[L_act] -= rho * sR[L_act]
        y_R[R_act] -= rho * sL[R_act]
        return y_A, y_L, y_R, y_x

    # -- main loop --------------------------------------------------------

    def _print(self, msg):
        print(msg, file=self.stream)

    def _initial_point(self, x0):
        """Return ``(x, y)`` to start the homotopy from, or ``None`` if infeasible."""
        opts = self.options
        if opts.solve_zero_penalty_first:
            res = self.ws.solve(self.problem.g)
            if not res.ok:
                return None
            return res.x, res.y
        if x0 is None:
            x0 = self.problem.x0 if self.problem.x0 is not None else np.zeros(self.problem.n)
        x0 = np.asarray(x0, dtype=float)
        st = self.stacked
        proj = QpWorkspace(np.eye(self.problem.n), st.A, st.lb, st.ub, tol=opts.qp_tolerance)
        res = proj.solve(-x0)
        if not res.ok:
            return None
        self.ws.warm_start(res.x)
        return self.ws.x.copy(), np.zeros(st.m)

    def solve(self, x0=None) -> Solution:
        opts = self.options
        pb = self.problem
        t0 = time.perf_counter()
        self.ws.reset()
        changes0 = self.ws.total_changes
        start = self._initial_point(x0)
        if start is None:
            return self._finish(SolverStatus.SUBPROBLEM_FAILURE, None, t0, changes0)

        x, y = start
        state = IterateState(x=x, y=y, rho=opts.initial_penalty_parameter,
                             rng=np.random.default_rng(opts.rng_seed))
        self._history = []
        self._trace = []
        self._best = None
        eps_tol = opts.stationarity_tolerance
        eps_phi = opts.complementarity_tolerance
        if opts.print_level >= 1:
            self._print(f"{'k':>4} {'j':>5} {'rho':>10} {'merit':>14} {'phi':>10} "
                        f"{'stat':>10} {'alpha':>8}")

        while True:
            rho = state.rho
            g_k = self.linear_term(rho)
            g_lin = g_k
            state.j = 0
            state.phi_history = deque([pb.phi(state.x)], maxlen=max(opts.n_dynamic_penalty, 1))
            stat = self.stationarity_residual(state.x, state.y, rho)
            broke = False
            alpha = 1.0
            while stat > eps_tol:
                if state.total_iterations >= opts.max_iterations:
                    self._remember(state, stat)
                    return self._finish(SolverStatus.MAX_ITERATIONS_REACHED, state, t0, changes0)
                g_lin = self.perturb_gradient(state, g_k)
                x_old = state.x
                res = self.inner_step(state, g_lin)
                if res.x is None:
                    return self._finish(SolverStatus.SUBPROBLEM_FAILURE, state, t0, changes0)
                alpha = self.step_length(x_old, res.x, rho, g_lin)
                state.x = x_old + alpha * (res.x - x_old)
                state.y = res.y
                state.j += 1
                state.total_iterations += 1
                stat = self.stationarity_residual(state.x, state.y, rho, g_lin)
                phi = pb.phi(state.x)
                if opts.record_trace:
                    p = res.x - x_old
                    self._trace.append(StepRecord(
                        state.k, state.j - 1, rho, x_old, res.x, g_lin, alpha,
                        self.directional_derivative(x_old, p, rho, g_lin),
                        float(p @ self.pen.C @ p), phi, stat))
                if opts.print_level >= 2:
                    self._print(f"{state.k:4d} {state.j:5d} {rho:10.3e} "
                                f"{pb.merit(state.x, rho):14.6e} {phi:10.3e} {stat:10.3e} {alpha:8.2e}")
                triggered = dynamic_penalty_triggered(
                    phi, state.phi_history, eps_phi, opts.eta_dynamic_penalty, opts.n_dynamic_penalty)
                state.phi_history.append(phi)
                if triggered:
                    broke = True
                    break

            phi = pb.phi(state.x)
            self._history.append(OuterRecord(state.k, rho, state.x.copy(), phi, stat, state.j, broke))
            self._remember(state, stat)
            if opts.print_level == 1:
                self._print(f"{state.k:4d} {state.j:5d} {rho:10.3e} "
                            f"{pb.merit(state.x, rho):14.6e} {phi:10.3e} {stat:10.3e} {alpha:8.2e}")
            if phi <= eps_phi and not broke:
                return self._finish(SolverStatus.SOLVED, state, t0, changes0, stat=stat)
            state.rho = rho * opts.penalty_update_factor
            state.k += 1
            if state.rho > opts.max_penalty_parameter:
                return self._finish(SolverStatus.MAX_PENALTY_REACHED, state, t0, changes0)

    def _remember(self, state, stat):
        """Track the best iterate so far (lowest phi, then lowest objective)."""
        phi = self.problem.phi(state.x)
        key = (phi, self.problem.objective(state.x))
        if self._best is None or key < self._best[0]:
            self._best = (key, state.x.copy(), state.y.copy(), state.rho, stat)

    def _finish(self, status, state, t0, changes0, stat=None):
        pb = self.problem
        changes = self.ws.total_changes - changes0
        if state is None:
            nan = np.full(pb.n, np.nan)
            st = self.stacked
            return Solution(status, nan, np.zeros(pb.n_A), np.zeros(pb.n_c), np.zeros(pb.n_c),
                            np.zeros(pb.n), np.nan, np.nan, np.nan, np.nan, 0, 0, changes,
                            time.perf_counter() - t0, np.zeros(st.m))
        if status is SolverStatus.SOLVED or self._best is None:
            x, y, rho = state.x, state.y, state.rho
        else:
            _, x, y, rho, stat = self._best
        if stat is None:
            stat = self.stationarity_residual(x, y, rho)
        y_A, y_L, y_R, y_x = self.translate_duals(x, y, rho)
        if self.options.print_level >= 1:
            self._print(f"status: {status.value}  objective: {pb.objective(x, True):.10g}  "
                        f"phi: {pb.phi(x):.3e}")
        return Solution(
            status=status, x=x.copy(), y_A=y_A, y_L=y_L, y_R=y_R, y_x=y_x,
            objective=pb.objective(x), phi=pb.phi(x), stationarity=stat, rho=rho,
            outer_iterations=len(self._history), inner_iterations=state.total_iterations,
            qp_changes=changes, wall_time=time.perf_counter() - t0, y_penalized=y.copy(),
            history=self._history, trace=self._trace)


def solve(problem: LcqpProblem, options: SolverOptions | None = None, x0=None, **overrides) -> Solution:
    """Solve an LCQP. Keyword overrides are applied on top of ``options``."""
    if options is None:
        options = SolverOptions(**overrides)
    elif overrides:
        options = SolverOptions(**{**options.__dict__, **overrides})
    return LcqpSolver(problem, options).solve(x0)


__all__ = [
    "LcqpSolver", "SolverOptions", "SolverStatus", "Solution", "IterateState",
    "StepRecord", "OuterRecord", "dynamic_penalty_triggered", "solve",
]
