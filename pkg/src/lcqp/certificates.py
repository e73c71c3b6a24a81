"""Strong-stationarity certificates and a brute-force global oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import EPS, LcqpProblem
from .qp import QpStatus, QpWorkspace

DEFAULT_ACTIVITY_TOL = 1e3 * EPS

LOWER, UPPER, BOTH, FREE = "l", "u", "e", "f"


def _classify_rows(values, lb, ub, tol):
    at_lb = np.isfinite(lb) & (np.abs(values - lb) <= tol * (1.0 + np.abs(lb)))
    at_ub = np.isfinite(ub) & (np.abs(values - ub) <= tol * (1.0 + np.abs(ub)))
    codes = np.full(values.shape, FREE, dtype="<U1")
    codes[at_lb] = LOWER
    codes[at_ub] = UPPER
    codes[at_lb & at_ub] = BOTH
    return codes


@dataclass
class ActiveSets:
    """Row-wise activity codes: ``l`` lower, ``u`` upper, ``e`` both, ``f`` free."""

    A: np.ndarray
    L: np.ndarray
    R: np.ndarray
    x: np.ndarray

    @property
    def L_lower(self) -> np.ndarray:
        return np.isin(self.L, (LOWER, BOTH))

    @property
    def R_lower(self) -> np.ndarray:
        return np.isin(self.R, (LOWER, BOTH))

    @property
    def biactive(self) -> np.ndarray:
        return np.flatnonzero(self.L_lower & self.R_lower)

    @property
    def L_only(self) -> np.ndarray:
        return np.flatnonzero(self.L_lower & ~self.R_lower)

    @property
    def R_only(self) -> np.ndarray:
        return np.flatnonzero(self.R_lower & ~self.L_lower)

    @property
    def complementarity_feasible(self) -> bool:
        return bool(np.all(self.L_lower | self.R_lower))


def classify_active_sets(problem: LcqpProblem, x, tol=DEFAULT_ACTIVITY_TOL) -> ActiveSets:
    x = np.asarray(x, dtype=float)
    pb = problem
    return ActiveSets(
        A=_classify_rows(pb.A @ x, pb.lb_A, pb.ub_A, tol),
        L=_classify_rows(pb.L @ x, pb.lb_L, pb.ub_L, tol),
        R=_classify_rows(pb.R @ x, pb.lb_R, pb.ub_R, tol),
        x=_classify_rows(x, pb.lb_x, pb.ub_x, tol),
    )


def _sign_violation(y, codes, exempt=()):
    """Largest violation of the KKT sign rules for one block of rows."""
    viol = np.zeros_like(y)
    lower = codes == LOWER
    upper = codes == UPPER
    if len(exempt):
        lower[np.asarray(exempt, dtype=int)] = False
    viol[lower] = np.maximum(-y[lower], 0.0)
    viol[upper] = np.maximum(y[upper], 0.0)
    return float(np.max(viol, initial=0.0))


def verify_strong_stationarity(problem: LcqpProblem, x, y_A, y_L, y_R, y_x=None,
                               tol=1e-8, activity_tol=DEFAULT_ACTIVITY_TOL):
    """Check whether ``(x, y)`` is a strongly stationary pair.

    Returns
    -------
    ok : bool
    residuals : dict
        ``stationarity`` (inf-norm of the Lagrangian gradient), ``free_duals``
        (largest dual on an inactive row), ``sign`` (largest sign violation),
        ``feasibility`` (largest bound violation), ``complementarity``
        (penalty value) and ``covered`` (every pair has an active side).
    """
    pb = problem
    x = np.asarray(x, dtype=float)
    y_A = np.asarray(y_A, dtype=float).reshape(pb.n_A)
    y_L = np.asarray(y_L, dtype=float).reshape(pb.n_c)
    y_R = np.asarray(y_R, dtype=float).reshape(pb.n_c)
    y_x = np.zeros(pb.n) if y_x is None else np.asarray(y_x, dtype=float)
    act = classify_active_sets(pb, x, activity_tol)

    grad = pb.Q @ x + pb.g - pb.A.T @ y_A - pb.L.T @ y_L - pb.R.T @ y_R - y_x
    stat = float(np.max(np.abs(grad), initial=0.0))

    free = 0.0
    for y, codes in ((y_A, act.A), (y_L, act.L), (y_R, act.R), (y_x, act.x)):
        free = max(free, float(np.max(np.abs(y[codes == FREE]), initial=0.0)))

    sign = max(
        _sign_violation(y_A, act.A),
        _sign_violation(y_x, act.x),
        _sign_violation(y_L, act.L, exempt=act.L_only),
        _sign_violation(y_R, act.R, exempt=act.R_only),
    )

    feas = 0.0
    for vals, lo, hi in ((pb.A @ x, pb.lb_A, pb.ub_A), (pb.L @ x, pb.lb_L, pb.ub_L),
                         (pb.R @ x, pb.lb_R, pb.ub_R), (x, pb.lb_x, pb.ub_x)):
        feas = max(feas, float(np.max(np.maximum(lo - vals, 0.0), initial=0.0)),
                   float(np.max(np.maximum(vals - hi, 0.0), initial=0.0)))

    residuals = {
        "stationarity": stat,
        "free_duals": free,
        "sign": sign,
        "feasibility": feas,
        "complementarity": abs(pb.phi(x)),
        "covered": act.complementarity_feasible,
    }
    ok = (residuals["covered"] and stat <= tol and free <= tol and sign <= tol
          and feas <= tol and residuals["complementarity"] <= tol)
    return ok, residuals


def penalty_bound(problem: LcqpProblem, x, y_L, y_R, activity_tol=DEFAULT_ACTIVITY_TOL) -> float:
    """Smallest penalty for which a strongly stationary point is a KKT point
    of the penalized problem (plus one)."""
    pb = problem
    x = np.asarray(x, dtype=float)
    act = classify_active_sets(pb, x, activity_tol)
    sL = pb.L @ x - pb.lb_L
    sR = pb.R @ x - pb.lb_R
    worst = 0.0
    for i in act.L_only:
        worst = max(worst, -y_L[i] / sR[i])
    for i in act.R_only:
        worst = max(worst, -y_R[i] / sL[i])
    return 1.0 + worst


def switch_duals(problem: LcqpProblem, x, y_A, y_L, y_R, rho, activity_tol=DEFAULT_ACTIVITY_TOL):
    """Map LCQP duals to duals of the penalized problem at penalty ``rho``."""
    pb = problem
    x = np.asarray(x, dtype=float)
    act = classify_active_sets(pb, x, activity_tol)
    sL = pb.L @ x - pb.lb_L
    sR = pb.R @ x - pb.lb_R
    yb_L = np.array(y_L, dtype=float)
    yb_R = np.array(y_R, dtype=float)
    Lm, Rm = act.L_lower, act.R_lower
    yb_L[Lm] += rho * sR[Lm]
    yb_R[Rm] += rho * sL[Rm]
    return np.array(y_A, dtype=float), yb_L, yb_R


@dataclass
class BranchRecord:
    mask: int
    status: str
    objective: float
    x: np.ndarray | None = None
    y_A: np.ndarray | None = None
    y_L: np.ndarray | None = None
    y_R: np.ndarray | None = None
    y_x: np.ndarray | None = None


@dataclass
class OracleResult:
    objective: float
    x: np.ndarray | None
    branches: list[BranchRecord] = field(default_factory=list)

    @property
    def n_feasible(self) -> int:
        return sum(b.status == QpStatus.OPTIMAL.value for b in self.branches)

    @property
    def best(self) -> BranchRecord | None:
        feas = [b for b in self.branches if b.status == QpStatus.OPTIMAL.value]
        return min(feas, key=lambda b: b.objective) if feas else None


class BranchLimitExceeded(ValueError):
    pass


def branch_enumerate(problem: LcqpProblem, branch_limit=2**20, qp_tol=1e-10) -> OracleResult:
    """Global minimum by enumerating which side of every pair sits at its bound.

    Bit ``i`` of a branch mask selects the pair side fixed to its lower bound:
    0 fixes ``L_i x = lb_L[i]``, 1 fixes ``R_i x = lb_R[i]``. Each branch is a
    convex QP.
    """
    pb = problem
    n_c = pb.n_c
    if 2 ** n_c > branch_limit:
        raise BranchLimitExceeded(
            f"branch limit exceeded: 2^{n_c} branches, limit {branch_limit}")
    st = pb.stacked()
    records = []
    for mask in range(2 ** n_c):
        ub = st.ub.copy()
        for i in range(n_c):
            row = n_c + i if (mask >> i) & 1 else i
            ub[row] = st.lb[row]
        res = QpWorkspace(pb.Q, st.A, st.lb, ub, tol=qp_tol).solve(pb.g)
        if res.x is None:
            records.append(BranchRecord(mask, res.status.value, np.inf))
            continue
        y_L, y_R, y_A, y_x = st.split(res.y)
        records.append(BranchRecord(mask, res.status.value, pb.objective(res.x),
                                    res.x, y_A, y_L, y_R, y_x))
    feas = [r for r in records if r.status == QpStatus.OPTIMAL.value]
    if not feas:
        return OracleResult(np.inf, None, records)
    best = min(feas, key=lambda r: r.objective)
    return OracleResult(best.objective, best.x.copy(), records)
