"""Problem data for quadratic programs with linear complementarity constraints.

The problem class is::

    minimize    1/2 x'Qx + g'x
    subject to  (Lx - lb_L)'(Rx - lb_R) = 0
                lb_L <= Lx <= ub_L
                lb_R <= Rx <= ub_R
                lb_A <= Ax <= ub_A
                lb_x <=  x <= ub_x

with ``Q`` symmetric positive definite. Infinite bounds are IEEE infinities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS = np.finfo(float).eps

# Bounds at or beyond this magnitude are treated as absent by the QP subsolver.
INF_BOUND = 1e20


def _as_vector(v, n, fill):
    if v is None:
        return np.full(n, fill, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    return v.copy()


@dataclass(frozen=True, eq=False)
class LcqpProblem:
    """Dense LCQP data.

    Parameters
    ----------
    Q : ndarray, shape (n, n)
        Objective Hessian, symmetric positive definite.
    g : ndarray, shape (n,)
        Objective linear term.
    L, R : ndarray, shape (n_c, n)
        Complementarity selector matrices.
    lb_L, lb_R : ndarray, shape (n_c,)
        Complementarity lower bounds; must be finite.
    ub_L, ub_R : ndarray, shape (n_c,), optional
        Complementarity upper bounds, default ``+inf``.
    A : ndarray, shape (n_A, n), optional
        General linear constraint matrix.
    lb_A, ub_A : ndarray, shape (n_A,), optional
        Bounds on ``Ax``, default ``-inf`` / ``+inf``.
    lb_x, ub_x : ndarray, shape (n,), optional
        Box bounds, default ``-inf`` / ``+inf``.
    x0 : ndarray, shape (n,), optional
        Initial guess carried along with the problem.
    obj_const : float
        Constant added to the objective for reporting only.
    name : str
        Free-form label.
    """

    Q: np.ndarray
    g: np.ndarray
    L: np.ndarray
    R: np.ndarray
    lb_L: np.ndarray
    lb_R: np.ndarray
    ub_L: np.ndarray | None = None
    ub_R: np.ndarray | None = None
    A: np.ndarray | None = None
    lb_A: np.ndarray | None = None
    ub_A: np.ndarray | None = None
    lb_x: np.ndarray | None = None
    ub_x: np.ndarray | None = None
    x0: np.ndarray | None = None
    obj_const: float = 0.0
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float)).copy()
        n = Q.shape[0]
        g = _as_vector(self.g, n, 0.0)
        L = np.asarray(self.L, dtype=float)
        R = np.asarray(self.R, dtype=float)
        n_c = L.shape[0] if L.ndim == 2 else (0 if L.size == 0 else 1)
        L = L.reshape(n_c, n) if L.size else np.zeros((n_c, n))
        R = R.reshape(n_c, n) if R.size else np.zeros((n_c, n))
        A = self.A
        if A is None or np.size(A) == 0:
            A = np.zeros((0, n))
        else:
            A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
        n_A = A.shape[0]
        set_(self, "Q", Q)
        set_(self, "g", g)
        set_(self, "L", L.copy())
        set_(self, "R", R.copy())
        set_(self, "A", A)
        set_(self, "lb_L", _as_vector(self.lb_L, n_c, 0.0))
        set_(self, "lb_R", _as_vector(self.lb_R, n_c, 0.0))
        set_(self, "ub_L", _as_vector(self.ub_L, n_c, np.inf))
        set_(self, "ub_R", _as_vector(self.ub_R, n_c, np.inf))
        set_(self, "lb_A", _as_vector(self.lb_A, n_A, -np.inf))
        set_(self, "ub_A", _as_vector(self.ub_A, n_A, np.inf))
        set_(self, "lb_x", _as_vector(self.lb_x, n, -np.inf))
        set_(self, "ub_x", _as_vector(self.ub_x, n, np.inf))
        if self.x0 is not None:
            set_(self, "x0", _as_vector(self.x0, n, 0.0))
        set_(self, "obj_const", float(self.obj_const))
        for arr in (self.Q, self.g, self.L, self.R, self.A, self.lb_L, self.lb_R,
                    self.ub_L, self.ub_R, self.lb_A, self.ub_A, self.lb_x, self.ub_x):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def n_c(self) -> int:
        return self.L.shape[0]

    @property
    def n_A(self) -> int:
        return self.A.shape[0]

    def objective(self, x, with_constant=False) -> float:
        x = np.asarray(x, dtype=float)
        val = 0.5 * x @ self.Q @ x + self.g @ x
        return float(val + self.obj_const) if with_constant else float(val)

    def penalty_structure(self) -> PenaltyStructure:
        if "pen" not in self._cache:
            self._cache["pen"] = PenaltyStructure.from_problem(self)
        return self._cache["pen"]

    def stacked(self) -> StackedConstraints:
        if "stack" not in self._cache:
            self._cache["stack"] = stack(self)
        return self._cache["stack"]

    def phi(self, x) -> float:
        """Complementarity penalty ``(Lx - lb_L)'(Rx - lb_R)``."""
        x = self._check_x(x)
        return float((self.L @ x - self.lb_L) @ (self.R @ x - self.lb_R))

    def merit(self, x, rho) -> float:
        """Penalized objective ``1/2 x'(Q + rho C)x + (g + rho g_phi)'x``.

        The constant ``rho * lb_L'lb_R`` of the penalty is left out.
        """
        x = self._check_x(x)
        pen = self.penalty_structure()
        H = self.Q + rho * pen.C
        return float(0.5 * x @ H @ x + (self.g + rho * pen.g_phi) @ x)

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected x of shape ({self.n},), got {x.shape}")
        return x


@dataclass(frozen=True)
class PenaltyStructure:
    """Quadratic form of the complementarity penalty.

    ``phi(x) = 1/2 x'Cx + g_phi'x + const_phi``.
    """

    C: np.ndarray
    g_phi: np.ndarray
    const_phi: float

    @classmethod
    def from_problem(cls, problem: LcqpProblem) -> PenaltyStructure:
        LR = problem.L.T @ problem.R
        C = LR + LR.T
        g_phi = -(problem.R.T @ problem.lb_L + problem.L.T @ problem.lb_R)
        return cls(C, g_phi, float(problem.lb_L @ problem.lb_R))

    def phi(self, x) -> float:
        return float(0.5 * x @ self.C @ x + self.g_phi @ x + self.const_phi)


# Source tags of stacked rows.
ROW_L, ROW_R, ROW_A, ROW_X = 0, 1, 2, 3


@dataclass(frozen=True)
class StackedConstraints:
    """All linear constraints stacked as ``lb <= A x <= ub``.

    Rows are ordered ``[L; R; A; I]``. ``source[i]`` holds the tag of the block
    row ``i`` came from and ``index[i]`` its row number inside that block.
    """

    A: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    source: np.ndarray
    index: np.ndarray
    n_c: int
    n_A: int

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def block(self, tag) -> slice:
        n_c, n_A = self.n_c, self.n_A
        starts = [0, n_c, 2 * n_c, 2 * n_c + n_A, self.m]
        return slice(starts[tag], starts[tag + 1])

    def split(self, y):
        """Split a stacked dual vector into ``(y_L, y_R, y_A, y_x)``."""
        y = np.asarray(y, dtype=float)
        return tuple(y[self.block(t)] for t in (ROW_L, ROW_R, ROW_A, ROW_X))

    def contains(self, x, tol=1e-9) -> bool:
        """Membership in the relaxed feasible set."""
        Ax = self.A @ x
        scale = 1.0 + np.abs(Ax)
        return bool(np.all(Ax >= self.lb - tol * scale) and np.all(Ax <= self.ub + tol * scale))


def stack(problem: LcqpProblem) -> StackedConstraints:
    n, n_c, n_A = problem.n, problem.n_c, problem.n_A
    A = np.vstack([problem.L, problem.R, problem.A, np.eye(n)])
    lb = np.concatenate([problem.lb_L, problem.lb_R, problem.lb_A, problem.lb_x])
    ub = np.concatenate([problem.ub_L, problem.ub_R, problem.ub_A, problem.ub_x])
    sizes = (n_c, n_c, n_A, n)
    source = np.repeat(np.arange(4), sizes)
    index = np.concatenate([np.arange(s) for s in sizes])
    for arr in (A, lb, ub, source, index):
        arr.flags.writeable = False
    return StackedConstraints(A, lb, ub, source, index, n_c, n_A)


def validate(problem: LcqpProblem, check_pd=True) -> list[str]:
    """Return a list of violated problem-class requirements (empty if valid)."""
    issues = []
    n, n_c, n_A = problem.n, problem.n_c, problem.n_A
    Q = problem.Q
    if Q.shape != (n, n):
        issues.append(f"Q must be square, got shape {Q.shape}")
    shapes = {
        "g": (problem.g, (n,)), "L": (problem.L, (n_c, n)), "R": (problem.R, (n_c, n)),
        "lb_L": (problem.lb_L, (n_c,)), "ub_L": (problem.ub_L, (n_c,)),
        "lb_R": (problem.lb_R, (n_c,)), "ub_R": (problem.ub_R, (n_c,)),
        "A": (problem.A, (n_A, n)), "lb_A": (problem.lb_A, (n_A,)), "ub_A": (problem.ub_A, (n_A,)),
        "lb_x": (problem.lb_x, (n,)), "ub_x": (problem.ub_x, (n,)),
    }
    for name, (arr, shape) in shapes.items():
        if arr.shape != shape:
            issues.append(f"dimension mismatch: {name} has shape {arr.shape}, expected {shape}")
    if problem.x0 is not None and problem.x0.shape != (n,):
        issues.append(f"dimension mismatch: x0 has shape {problem.x0.shape}, expected ({n},)")
    if issues:
        return issues

    for name in ("Q", "g", "L", "R", "A"):
        if not np.all(np.isfinite(getattr(problem, name))):
            issues.append(f"{name} contains non-finite entries")
    if Q.shape[0] and np.max(np.abs(Q - Q.T)) > 1e-12 * max(1.0, np.max(np.abs(Q))):
        issues.append("Q is not symmetric")
    if not np.all(np.isfinite(problem.lb_L)):
        issues.append("complementarity lower bound not finite (lb_L)")
    if not np.all(np.isfinite(problem.lb_R)):
        issues.append("complementarity lower bound not finite (lb_R)")
    for lo, hi in (("lb_L", "ub_L"), ("lb_R", "ub_R"), ("lb_A", "ub_A"), ("lb_x", "ub_x")):
        lo_v, hi_v = getattr(problem, lo), getattr(problem, hi)
        if np.any(np.isnan(lo_v)) or np.any(np.isnan(hi_v)):
            issues.append(f"{lo}/{hi} contain NaN")
        bad = np.flatnonzero(lo_v > hi_v)
        if bad.size:
            issues.append(f"{lo} > {hi} at rows {bad.tolist()}")
    if check_pd and not issues and not is_positive_definite(Q):
        issues.append("Hessian not positive definite")
    return issues


def is_positive_definite(Q) -> bool:
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        return False
    return True
