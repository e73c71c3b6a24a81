"""Benchmark problem generators and performance profiles.

Families
--------
toy
    Two variables, one complementarity pair, two strongly stationary points.
ivocp
    Discretized optimal control of a switched 1-D ODE.
masses
    Chain of masses driven by a control force with Coulomb-type friction.
intqp
    A bounded integer variable encoded by binary complementarity pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import LcqpProblem

EPS_Q = 1e-8


# -- toy -----------------------------------------------------------------


def gen_toy() -> LcqpProblem:
    """``min (x1 - 1)^2 + (x2 - 1)^2  s.t.  0 <= x1 _|_ x2 >= 0``."""
    return LcqpProblem(
        Q=2.0 * np.eye(2), g=[-2.0, -2.0],
        L=[[1.0, 0.0]], R=[[0.0, 1.0]], lb_L=[0.0], lb_R=[0.0],
        obj_const=2.0, name="toy",
    )


# -- initial value optimal control ----------------------------------------


@dataclass(frozen=True)
class IvocpSpec:
    """Switched ODE ``xdot in 2 - sign(x)`` on ``[0, T]``, ``N`` implicit Euler steps.

    The discrete objective is ``sum_{k<N} h x_k^2 + (x_N - 5/3)^2``.
    """

    N: int = 50
    x0_guess: float = -1.9
    T: float = 2.0
    eps_q: float = EPS_Q

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def h(self) -> float:
        return self.T / self.N


def ivocp_layout(N):
    """Index arrays ``(x, y, lam)``: ``x_0..x_N``, ``y_1..y_N``, ``lam_1..lam_N``."""
    x = np.arange(N + 1)
    y = N + 1 + np.arange(N)
    lam = 2 * N + 1 + np.arange(N)
    return x, y, lam


def gen_ivocp(spec: IvocpSpec | None = None, **kwargs) -> LcqpProblem:
    spec = spec or IvocpSpec(**kwargs)
    N, h = spec.N, spec.h
    n = 3 * N + 1
    ix, iy, il = ivocp_layout(N)

    Q = np.zeros((n, n))
    Q[ix[:-1], ix[:-1]] = 2.0 * h
    Q[ix[-1], ix[-1]] = 2.0
    Q[iy, iy] = spec.eps_q
    Q[il, il] = spec.eps_q
    g = np.zeros(n)
    g[ix[-1]] = -10.0 / 3.0

    # x_k - x_{k-1} - h (3 (1 - y_k) + y_k) = 0
    A = np.zeros((N, n))
    k = np.arange(N)
    A[k, ix[1:]] = 1.0
    A[k, ix[:-1]] = -1.0
    A[k, iy] = 2.0 * h
    b = np.full(N, 3.0 * h)

    # 0 <= x_k + lam_k _|_ 1 - y_k >= 0   and   0 <= lam_k _|_ y_k >= 0
    L = np.zeros((2 * N, n))
    R = np.zeros((2 * N, n))
    L[k, ix[1:]] = 1.0
    L[k, il] = 1.0
    R[k, iy] = -1.0
    L[N + k, il] = 1.0
    R[N + k, iy] = 1.0
    lb_R = np.concatenate([-np.ones(N), np.zeros(N)])

    x0 = np.zeros(n)
    x0[ix[0]] = spec.x0_guess
    return LcqpProblem(Q=Q, g=g, L=L, R=R, lb_L=np.zeros(2 * N), lb_R=lb_R,
                       A=A, lb_A=b, ub_A=b, x0=x0, obj_const=25.0 / 9.0,
                       name=f"ivocp-N{N}")


def simulate_ivocp(x0, N, T=2.0):
    """Forward simulation of the discrete complementarity system.

    Each implicit Euler step has a unique solution: with ``x = x_{k-1}``,
    ``y = 0`` if ``x + 3h <= 0``, ``y = 1`` if ``x + h >= 0``, and otherwise
    the state sticks at zero with ``y = (x + 3h) / (2h)``. ``x0`` may be an
    array of initial values.

    Returns
    -------
    x : ndarray, shape (..., N + 1)
    y, lam : ndarray, shape (..., N)
    """
    h = T / N
    x0 = np.asarray(x0, dtype=float)
    x = np.empty(x0.shape + (N + 1,))
    y = np.empty(x0.shape + (N,))
    x[..., 0] = x0
    for k in range(N):
        prev = x[..., k]
        yk = np.clip((prev + 3.0 * h) / (2.0 * h), 0.0, 1.0)
        x[..., k + 1] = prev + h * (3.0 - 2.0 * yk)
        y[..., k] = yk
    lam = np.maximum(-x[..., 1:], 0.0)
    return x, y, lam


def ivocp_objective(x, T=2.0):
    """Objective with constant for a state trajectory ``x_0..x_N``."""
    x = np.asarray(x, dtype=float)
    N = x.shape[-1] - 1
    h = T / N
    return h * np.sum(x[..., :-1] ** 2, axis=-1) + (x[..., -1] - 5.0 / 3.0) ** 2


def ivocp_scan(N, T=2.0, lo=-2.5, hi=1.5, step=1e-4, refine=True):
    """Global minimum of the reduced objective over ``x_0`` by grid scan.

    Returns ``(x0_best, objective_best)``, objective with constant.
    """
    grid = np.arange(lo, hi + step / 2, step)
    vals = ivocp_objective(simulate_ivocp(grid, N, T)[0], T)
    i = int(np.argmin(vals))
    best_x, best_f = grid[i], vals[i]
    if refine:
        from scipy.optimize import minimize_scalar

        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(lambda t: float(ivocp_objective(simulate_ivocp(t, N, T)[0], T)),
                              bounds=(a, b), method="bounded", options={"xatol": 1e-12})
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    return float(best_x), float(best_f)


def ivocp_stage_residual(z, N, T=2.0) -> float:
    """Largest violation of the stage equations and complementarity in ``z``."""
    h = T / N
    ix, iy, il = ivocp_layout(N)
    x, y, lam = z[ix], z[iy], z[il]
    dyn = x[1:] - x[:-1] - h * (3.0 * (1.0 - y) + y)
    a, b = x[1:] + lam, 1.0 - y
    viol = [np.abs(dyn), np.maximum(-a, 0), np.maximum(-b, 0), np.maximum(-lam, 0),
            np.maximum(-y, 0), np.abs(np.minimum(np.abs(a), np.abs(b))),
            np.abs(np.minimum(np.abs(lam), np.abs(y)))]
    return float(max(np.max(v) for v in viol))


# -- moving masses --------------------------------------------------------


@dataclass(frozen=True)
class MovingMassesSpec:
    """``s`` masses in a row, springs between neighbours and to a wall on the
    left, control force on the last mass, friction ``mu * (2y - 1)``.

    The state per mass is ``(p_i, v_i)``; ``p0`` and ``v0`` default to ones
    and zeros.
    """

    s: int = 2
    N: int = 50
    T: float = 2.0
    p0: tuple | None = None
    v0: tuple | None = None
    friction: float = 0.3
    eps_q: float = EPS_Q

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError("s must be a positive integer")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name in ("p0", "v0"):
            val = getattr(self, name)
            if val is not None and len(val) != self.s:
                raise ValueError(f"{name} must have length s")

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def initial_state(self) -> np.ndarray:
        p = np.ones(self.s) if self.p0 is None else np.asarray(self.p0, dtype=float)
        v = np.zeros(self.s) if self.v0 is None else np.asarray(self.v0, dtype=float)
        return np.concatenate([p, v])


@dataclass(frozen=True)
class MassesLayout:
    """Index arrays into the decision vector.

    ``p``, ``v`` have shape ``(N + 1, s)``; ``u`` shape ``(N,)``; ``y``,
    ``lam`` and ``theta`` shape ``(N, s)``. ``theta = lam + v`` is an
    auxiliary variable so that every pair has a single-entry ``L`` row.
    """

    p: np.ndarray
    v: np.ndarray
    u: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    n: int


def masses_layout(s, N) -> MassesLayout:
    states = np.arange((N + 1) * 2 * s).reshape(N + 1, 2 * s)
    base = (N + 1) * 2 * s
    stage = base + np.arange(N * (1 + 3 * s)).reshape(N, 1 + 3 * s)
    return MassesLayout(
        p=states[:, :s], v=states[:, s:], u=stage[:, 0],
        y=stage[:, 1:1 + s], lam=stage[:, 1 + s:1 + 2 * s], theta=stage[:, 1 + 2 * s:],
        n=base + N * (1 + 3 * s),
    )


def masses_force(p, v, u, y, friction=0.3):
    """Acceleration of every mass (unit masses and springs)."""
    p = np.asarray(p, dtype=float)
    s = p.shape[-1]
    left = np.concatenate([np.zeros(p.shape[:-1] + (1,)), p[..., :-1]], axis=-1)
    acc = (left - p) - v - friction * (2.0 * np.asarray(y) - 1.0)
    acc[..., :-1] += p[..., 1:] - p[..., :-1]
    acc[..., s - 1] += u
    return acc


def gen_moving_masses(spec: MovingMassesSpec | None = None, **kwargs) -> LcqpProblem:
    spec = spec or MovingMassesSpec(**kwargs)
    s, N, h, mu = spec.s, spec.N, spec.h, spec.friction
    lay = masses_layout(s, N)
    n = lay.n

    diag = np.full(n, spec.eps_q)
    diag[lay.p[:-1].ravel()] = 2.0 * h
    diag[lay.v[:-1].ravel()] = 2.0 * h
    diag[lay.u] = 2.0 * h
    Q = np.diag(diag)

    rows = []
    rhs = []
    for k in range(1, N + 1):
        st = k - 1
        for i in range(s):
            # p_k - p_{k-1} - h v_k = 0
            r = np.zeros(n)
            r[lay.p[k, i]] = 1.0
            r[lay.p[k - 1, i]] = -1.0
            r[lay.v[k, i]] = -h
            rows.append(r)
            rhs.append(0.0)
        for i in range(s):
            # v_k - v_{k-1} - h a(p_k, v_k, u_k, y_k) = 0, constant moved right
            r = np.zeros(n)
            r[lay.v[k, i]] = 1.0 + h
            r[lay.v[k - 1, i]] = -1.0
            r[lay.p[k, i]] += 2.0 * h if i < s - 1 else h
            if i > 0:
                r[lay.p[k, i - 1]] -= h
            if i < s - 1:
                r[lay.p[k, i + 1]] -= h
            r[lay.y[st, i]] = 2.0 * mu * h
            if i == s - 1:
                r[lay.u[st]] = -h
            rows.append(r)
            rhs.append(mu * h)
        for i in range(s):
            # theta = lam + v_k
            r = np.zeros(n)
            r[lay.theta[st, i]] = 1.0
            r[lay.lam[st, i]] = -1.0
            r[lay.v[k, i]] = -1.0
            rows.append(r)
            rhs.append(0.0)
    for j in np.concatenate([lay.p[N], lay.v[N]]):
        r = np.zeros(n)
        r[j] = 1.0
        rows.append(r)
        rhs.append(0.0)
    A = np.array(rows)
    b = np.array(rhs)

    n_c = 2 * s * N
    L = np.zeros((n_c, n))
    R = np.zeros((n_c, n))
    half = s * N
    th, lam, y = lay.theta.ravel(), lay.lam.ravel(), lay.y.ravel()
    idx = np.arange(half)
    L[idx, th] = 1.0
    R[idx, y] = -1.0
    L[half + idx, lam] = 1.0
    R[half + idx, y] = 1.0
    lb_R = np.concatenate([-np.ones(half), np.zeros(half)])

    lb_x = np.full(n, -np.inf)
    ub_x = np.full(n, np.inf)
    x_init = spec.initial_state
    init_idx = np.concatenate([lay.p[0], lay.v[0]])
    lb_x[init_idx] = x_init
    ub_x[init_idx] = x_init

    return LcqpProblem(Q=Q, g=np.zeros(n), L=L, R=R, lb_L=np.zeros(n_c), lb_R=lb_R,
                       A=A, lb_A=b, ub_A=b, lb_x=lb_x, ub_x=ub_x,
                       name=f"masses-s{s}-N{N}-T{spec.T:g}")


def masses_residuals(spec: MovingMassesSpec, z) -> dict:
    """Stage-wise checks on a decision vector, computed from the dynamics.

    Keys: ``dynamics`` (implicit Euler defect), ``initial``, ``terminal`` and
    ``complementarity`` (largest pair product or sign violation).
    """
    s, N, h = spec.s, spec.N, spec.h
    lay = masses_layout(s, N)
    z = np.asarray(z, dtype=float)
    p, v, u, y, lam = z[lay.p], z[lay.v], z[lay.u], z[lay.y], z[lay.lam]
    acc = masses_force(p[1:], v[1:], u, y, spec.friction)
    dyn_p = p[1:] - p[:-1] - h * v[1:]
    dyn_v = v[1:] - v[:-1] - h * acc
    a, b = lam + v[1:], 1.0 - y
    comp = max(float(np.max(np.abs(a * b))), float(np.max(np.abs(lam * y))),
               float(np.max(np.maximum(-np.concatenate([a, b, lam, y]), 0.0))))
    x0 = np.concatenate([p[0], v[0]])
    return {
        "dynamics": float(max(np.max(np.abs(dyn_p)), np.max(np.abs(dyn_v)))),
        "initial": float(np.max(np.abs(x0 - spec.initial_state))),
        "terminal": float(max(np.max(np.abs(p[N])), np.max(np.abs(v[N])))),
        "complementarity": comp,
    }


# -- integer encoding -----------------------------------------------------


@dataclass(frozen=True)
class IntegerQpSpec:
    """``min weight * (z - target)^2`` over integers ``0 <= z < 2^bits``."""

    bits: int = 3
    target: float = 2.3
    weight: float = 1.0
    regularize: bool = False
    eps_q: float = EPS_Q

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError("bits must be a positive integer")
        if not self.weight > 0:
            raise ValueError("weight must be positive")


def gen_integer_qp(spec: IntegerQpSpec | None = None, **kwargs) -> LcqpProblem:
    """Variables ``(z, b_1, ..., b_bits)`` with ``z = sum 2^(i-1) b_i`` and
    ``0 <= b_i _|_ 1 - b_i >= 0``.

    With ``regularize`` the convex term ``(b_i - 1/2)^2 - 1/4 = b_i^2 - b_i``
    is added for every bit. It vanishes at binary points, so feasible
    objective values are unchanged, and it centres the relaxed solution at
    the maximizer of the concave penalty. The initial guess is set there too.
    """
    spec = spec or IntegerQpSpec(**kwargs)
    nb, w, t = spec.bits, spec.weight, spec.target
    n = nb + 1
    reg = 2.0 if spec.regularize else 0.0
    Q = np.diag(np.concatenate([[2.0 * w], np.full(nb, spec.eps_q + reg)]))
    g = np.zeros(n)
    g[0] = -2.0 * w * t
    g[1:] = -reg / 2.0
    A = np.concatenate([[1.0], -(2.0 ** np.arange(nb))])[None, :]
    L = np.zeros((nb, n))
    L[np.arange(nb), 1 + np.arange(nb)] = 1.0
    R = -L
    x0 = None
    if spec.regularize:
        x0 = np.concatenate([[(2.0 ** nb - 1.0) / 2.0], np.full(nb, 0.5)])
    return LcqpProblem(Q=Q, g=g, L=L, R=R, lb_L=np.zeros(nb), lb_R=-np.ones(nb),
                       A=A, lb_A=[0.0], ub_A=[0.0], x0=x0, obj_const=w * t * t,
                       name=f"intqp-b{nb}-t{t:g}" + ("-reg" if spec.regularize else ""))


def binary_regularization(b):
    """``(b - 1/2)^2 - 1/4``, zero at every binary point."""
    b = np.asarray(b, dtype=float)
    return (b - 0.5) ** 2 - 0.25


def integer_qp_enumerate(bits, target, weight=1.0):
    """Best integer ``z`` and its objective (with constant)."""
    z = np.arange(2 ** bits)
    vals = weight * (z - target) ** 2
    i = int(np.argmin(vals))
    return int(z[i]), float(vals[i])


# -- performance profiles -------------------------------------------------


@dataclass
class ProfileTable:
    """Run times per (problem, solver); ``inf`` or ``nan`` marks a failure."""

    problems: list
    solvers: list
    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(len(self.problems), len(self.solvers))
        t[~np.isfinite(t) | (t < 0)] = np.inf
        self.times = t

    def ratios(self) -> np.ndarray:
        best = np.min(self.times, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = self.times / best
        r[~np.isfinite(self.times) | ~np.isfinite(best).repeat(len(self.solvers), 1)] = np.inf
        return r


def performance_profile(table: ProfileTable, tau_grid) -> dict:
    """Fraction of problems each solver finishes within ``tau`` times the best.

    Returns a mapping ``solver -> ndarray`` aligned with ``tau_grid``.
    """
    taus = np.asarray(tau_grid, dtype=float)
    r = table.ratios()
    n_p = max(len(table.problems), 1)
    return {s: np.array([np.count_nonzero(r[:, j] <= tau) / n_p for tau in taus])
            for j, s in enumerate(table.solvers)}


def write_profile_csv(path, table: ProfileTable, tau_grid):
    curves = performance_profile(table, tau_grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", *table.solvers])
        for i, tau in enumerate(tau_grid):
            w.writerow([repr(float(tau)), *(repr(float(curves[s][i])) for s in table.solvers)])
    return curves


# -- random instances -----------------------------------------------------


def gen_random(rng=None, n=None, n_c=None, n_A=None, box=True) -> LcqpProblem:
    """Small random LCQP that is feasible by construction.

    A reference point ``xr`` is drawn first; bounds are placed so that ``xr``
    satisfies every constraint and one side of every pair is active there.
    """
    rng = np.random.default_rng(rng)
    n = int(rng.integers(2, 7)) if n is None else n
    n_c = int(rng.integers(1, min(3, n) + 1)) if n_c is None else n_c
    n_A = int(rng.integers(0, 4)) if n_A is None else n_A
    M = rng.standard_normal((n, n))
    Q = M.T @ M + 0.1 * np.eye(n)
    g = rng.standard_normal(n) * 2.0
    xr = rng.standard_normal(n)

    L = np.zeros((n_c, n))
    R = np.zeros((n_c, n))
    for i in range(n_c):
        if rng.random() < 0.5:
            # variable-selector pairs, the common case in applications
            a, b = rng.choice(n, size=2, replace=False)
            L[i, a] = 1.0
            R[i, b] = 1.0
        else:
            L[i] = rng.standard_normal(n)
            R[i] = rng.standard_normal(n)
    slack_L = rng.uniform(0.0, 1.0, n_c)
    slack_R = rng.uniform(0.0, 1.0, n_c)
    zero_L = rng.random(n_c) < 0.5
    slack_L[zero_L] = 0.0
    slack_R[~zero_L] = 0.0
    lb_L = L @ xr - slack_L
    lb_R = R @ xr - slack_R

    A = rng.standard_normal((n_A, n))
    Ax = A @ xr
    lb_A = Ax - rng.uniform(0.0, 1.0, n_A)
    ub_A = Ax + rng.uniform(0.0, 1.0, n_A)
    kind = rng.integers(0, 4, n_A)
    lb_A[kind == 1] = -np.inf
    ub_A[kind == 2] = np.inf
    lb_A[kind == 3] = ub_A[kind == 3] = Ax[kind == 3]

    lb_x = np.full(n, -np.inf)
    ub_x = np.full(n, np.inf)
    if box:
        boxed = rng.random(n) < 0.3
        lb_x[boxed] = xr[boxed] - rng.uniform(0.0, 2.0, boxed.sum())
        ub_x[boxed] = xr[boxed] + rng.uniform(0.0, 2.0, boxed.sum())
    return LcqpProblem(Q=Q, g=g, L=L, R=R, lb_L=lb_L, lb_R=lb_R, A=A, lb_A=lb_A,
                       ub_A=ub_A, lb_x=lb_x, ub_x=ub_x, name="random")
