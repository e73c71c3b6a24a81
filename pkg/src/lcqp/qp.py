"""Warm-started primal active-set solver for strictly convex QPs.

Solves::

    minimize    1/2 x'Qx + q'x
    subject to  lb <= A x <= ub

for a fixed ``Q`` and fixed constraints while ``q`` changes between calls.
The factorization follows Goldfarb and Idnani: with ``Q = LL'`` we keep
``J = L^{-T} Qf`` and an upper triangular ``R`` such that
``J' A_W' = [R; 0]`` for the working-set normals ``A_W``. Adding or dropping
a working-set row is an O(n^2) update of ``J`` and ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.linalg import solve_triangular
from scipy.optimize import linprog

from .model import INF_BOUND


class NotPositiveDefiniteError(ValueError):
    pass


class QpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration-limit"


# Working-set sides.
LOWER, UPPER, EQUAL = 1, -1, 0


@dataclass
class QpSolution:
    """Result of one QP solve.

    ``y`` is indexed like the constraint rows: nonnegative on active lower
    bounds, nonpositive on active upper bounds and zero on inactive rows, so
    that ``Qx + q - A'y = 0`` at optimality.
    """

    x: np.ndarray | None
    y: np.ndarray | None
    status: QpStatus
    changes: int = 0
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def _operator(M, max_density=0.2):
    if M.size and np.count_nonzero(M) <= max_density * M.size:
        return sparse.csr_matrix(M)
    return M


class QpWorkspace:
    """Solver state shared across a sequence of QPs.

    Parameters
    ----------
    Q : ndarray, shape (n, n)
        Positive definite Hessian.
    A : ndarray, shape (m, n)
        Constraint matrix.
    lb, ub : ndarray, shape (m,)
        Constraint bounds; magnitudes of at least ``1e20`` count as absent.
    tol : float
        Absolute tolerance on stationarity and feasibility.
    max_iter : int, optional
        Iteration cap per solve, default ``10 * (n + m)``.
    """

    def __init__(self, Q, A, lb, ub, tol=1e-10, max_iter=None):
        Q = np.asarray(Q, dtype=float)
        try:
            chol = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("Hessian not positive definite") from None
        self.Q = Q
        self.chol = chol
        self.n = n = Q.shape[0]
        self.A = np.asarray(A, dtype=float).reshape(-1, n)
        self.m = m = self.A.shape[0]
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        self.lb = np.where(lb <= -INF_BOUND, -np.inf, lb)
        self.ub = np.where(ub >= INF_BOUND, np.inf, ub)
        self.is_eq = np.isfinite(self.lb) & (self.lb == self.ub)
        self.row_norm = np.linalg.norm(self.A, axis=1)
        # sparse copies for the matrix-vector products in the main loop
        self._A_op = _operator(self.A)
        self._Q_op = _operator(Q)
        self.tol = tol
        self.max_iter = max_iter if max_iter is not None else 10 * (n + m)
        self._J0 = np.asfortranarray(solve_triangular(chol.T, np.eye(n), lower=False))
        self.total_changes = 0
        self.reset()

    # -- factorization ----------------------------------------------------

    def reset(self):
        """Forget the working set and the last solution."""
        self.J = self._J0.copy(order="F")
        self.R = np.zeros((self.n, self.n))
        self.rows: list[int] = []
        self.sides: list[int] = []
        self.x: np.ndarray | None = None
        self.in_ws = np.zeros(self.m, dtype=bool)

    @property
    def working_set(self) -> list[tuple[int, int]]:
        return list(zip(self.rows, self.sides))

    def _normal(self, row, side):
        return -self.A[row] if side == UPPER else self.A[row]

    def _rhs(self, row, side):
        return -self.ub[row] if side == UPPER else self.lb[row]

    def _add(self, row, side, dep_tol=1e-10) -> bool:
        m = len(self.rows)
        if m >= self.n:
            return False
        d = self.J.T @ self._normal(row, side)
        tail = d[m:]
        nrm = np.linalg.norm(tail)
        if nrm <= dep_tol * max(np.linalg.norm(d), 1e-300):
            return False
        sgn = 1.0 if tail[0] >= 0 else -1.0
        v = tail.copy()
        v[0] += sgn * nrm
        J2 = self.J[:, m:]
        J2 -= np.outer(J2 @ v, v * (2.0 / (v @ v)))
        self.R[:m, m] = d[:m]
        self.R[m, m] = -sgn * nrm
        self.rows.append(row)
        self.sides.append(side)
        self.in_ws[row] = True
        return True

    def _remove(self, k):
        m = len(self.rows)
        R = self.R
        J = self.J
        R[:m, k:m - 1] = R[:m, k + 1:m]
        R[:m, m - 1] = 0.0
        for i in range(k, m - 1):
            a, b = R[i, i], R[i + 1, i]
            if b == 0.0:
                continue
            r = np.hypot(a, b)
            c, s = a / r, b / r
            ri = R[i, i:m - 1].copy()
            R[i, i:m - 1] = c * ri + s * R[i + 1, i:m - 1]
            R[i + 1, i:m - 1] = -s * ri + c * R[i + 1, i:m - 1]
            R[i + 1, i] = 0.0
            ji = J[:, i].copy()
            J[:, i] = c * ji + s * J[:, i + 1]
            J[:, i + 1] = -s * ji + c * J[:, i + 1]
        R[m - 1, :m] = 0.0
        row = self.rows.pop(k)
        self.sides.pop(k)
        self.in_ws[row] = False
        if not self.rows:
            # drop accumulated rounding from the updates
            self.J[:] = self._J0

    def _multipliers(self, grad):
        m = len(self.rows)
        if m == 0:
            return np.zeros(0)
        return solve_triangular(self.R[:m, :m], self.J[:, :m].T @ grad, lower=False)

    def _snap(self, x):
        """Minimum-norm correction making every working-set row exactly active."""
        m = len(self.rows)
        if m == 0:
            return x
        resid = np.array([self._rhs(r, s) - self._normal(r, s) @ x
                          for r, s in zip(self.rows, self.sides)])
        z = solve_triangular(self.R[:m, :m], resid, trans="T", lower=False)
        return x + self.J[:, :m] @ z

    def _eqp_point(self, q):
        """Minimizer of the objective with the working set as equalities."""
        m = len(self.rows)
        J1, J2 = self.J[:, :m], self.J[:, m:]
        x = -(J2 @ (J2.T @ q))
        if m:
            b = np.array([self._rhs(r, s) for r, s in zip(self.rows, self.sides)])
            x += J1 @ solve_triangular(self.R[:m, :m], b, trans="T", lower=False)
            # ill-conditioned Q amplifies rounding in J; refine feasibility.
            # Corrections lie in Q^{-1} range(A_W'), so stationarity is unchanged.
            for _ in range(2):
                x = self._snap(x)
        return x

    def _refine(self, x, q, steps=3):
        """Iterative refinement of the working-set KKT system.

        The updated factors carry rounding amplified by the conditioning of
        ``Q``; they still serve as an approximate inverse for correcting
        ``(x, lam)`` against the true residuals.
        """
        m = len(self.rows)
        grad = self.Q @ x + q
        lam = self._multipliers(grad)
        if m == 0:
            return x, lam
        J1, J2 = self.J[:, :m], self.J[:, m:]
        Rm = self.R[:m, :m]
        sgn = np.where(np.array(self.sides) == UPPER, -1.0, 1.0)
        AW = self.A[self.rows] * sgn[:, None]
        b = np.array([self._rhs(r, s) for r, s in zip(self.rows, self.sides)])
        for _ in range(steps):
            r = self.Q @ x + q - AW.T @ lam
            c = AW @ x - b
            dx = -(J2 @ (J2.T @ r)) - J1 @ solve_triangular(Rm, c, trans="T", lower=False)
            dlam = solve_triangular(Rm, J1.T @ (r + self.Q @ dx), lower=False)
            x = x + dx
            lam = lam + dlam
        return x, lam

    def _dual_vector(self, lam):
        y = np.zeros(self.m)
        for row, side, val in zip(self.rows, self.sides, lam):
            y[row] = -val if side == UPPER else val
        return y

    # -- starting points --------------------------------------------------

    def warm_start(self, x, act_tol=1e-9):
        """Restart from a feasible point, collecting its active rows."""
        self.reset()
        x = np.asarray(x, dtype=float).copy()
        Ax = self.A @ x
        scale = act_tol * (1.0 + np.abs(Ax))
        at_lb = np.isfinite(self.lb) & (np.abs(Ax - self.lb) <= scale)
        at_ub = np.isfinite(self.ub) & (np.abs(Ax - self.ub) <= scale)
        for row in np.flatnonzero(self.is_eq):
            self._add(row, EQUAL)
        for row in np.flatnonzero((at_lb | at_ub) & ~self.is_eq):
            self._add(row, LOWER if at_lb[row] else UPPER)
        self.x = self._snap(x)

    def _phase_one(self) -> np.ndarray | None:
        A = self.A
        fin_lb = np.isfinite(self.lb) & ~self.is_eq
        fin_ub = np.isfinite(self.ub) & ~self.is_eq
        A_ub = sparse.vstack([sparse.csr_matrix(A[fin_ub]), sparse.csr_matrix(-A[fin_lb])])
        b_ub = np.concatenate([self.ub[fin_ub], -self.lb[fin_lb]])
        kw = {}
        if np.any(self.is_eq):
            kw = dict(A_eq=sparse.csr_matrix(A[self.is_eq]), b_eq=self.lb[self.is_eq])
        if A_ub.shape[0] == 0:
            A_ub, b_ub = None, None
        res = linprog(np.zeros(self.n), A_ub=A_ub, b_ub=b_ub, bounds=(None, None),
                      method="highs-ds", options={"primal_feasibility_tolerance": 1e-10}, **kw)
        if res.status != 0:
            return None
        return res.x

    # -- main loop --------------------------------------------------------

    def solve(self, q) -> QpSolution:
        """Minimize ``1/2 x'Qx + q'x`` warm-started from the previous solve."""
        q = np.asarray(q, dtype=float)
        if self.x is None:
            if self.m == 0:
                self.x = np.zeros(self.n)
            else:
                x0 = self._phase_one()
                if x0 is None:
                    return QpSolution(None, None, QpStatus.INFEASIBLE)
                self.warm_start(x0)
        Q, A = self._Q_op, self._A_op
        x = self.x.copy()
        changes = 0
        at_min = False
        skipped: set[int] = set()
        status = QpStatus.ITERATION_LIMIT
        lam = np.zeros(0)
        for it in range(self.max_iter):
            grad = Q @ x + q
            m = len(self.rows)
            if not at_min:
                J2 = self.J[:, m:]
                p = -(J2 @ (J2.T @ grad))
                pmax = np.max(np.abs(p)) if p.size else 0.0
                if pmax <= 1e-14 * (1.0 + np.max(np.abs(x))):
                    at_min = True
            if at_min:
                lam = self._multipliers(grad)
                ineq = np.array([s != EQUAL for s in self.sides], dtype=bool)
                dual_tol = 1e-12 * max(1.0, np.max(np.abs(lam)) if lam.size else 1.0)
                if ineq.any():
                    cand = np.where(ineq, lam, np.inf)
                    k = int(np.argmin(cand))
                    if cand[k] < -dual_tol:
                        self._remove(k)
                        changes += 1
                        skipped.clear()
                        at_min = False
                        continue
                status = QpStatus.OPTIMAL
                x, lam = self._refine(self._eqp_point(q), q)
                break
            # ratio test over rows outside the working set
            Ap = A @ p
            Ax = A @ x
            small = 1e-13 * pmax * self.row_norm
            free = ~self.in_ws
            if skipped:
                free[list(skipped)] = False
            t = np.full(self.m, np.inf)
            hit_lb = free & np.isfinite(self.lb) & (Ap < -small)
            hit_ub = free & np.isfinite(self.ub) & (Ap > small)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_lb = np.where(hit_lb, (self.lb - Ax) / Ap, np.inf)
                t_ub = np.where(hit_ub, (self.ub - Ax) / Ap, np.inf)
            t = np.minimum(t_lb, t_ub)
            blk = int(np.argmin(t)) if self.m else -1
            t_blk = max(t[blk], 0.0) if self.m else np.inf
            if t_blk < 1.0:
                x = x + t_blk * p
                if self.is_eq[blk]:
                    side = EQUAL
                else:
                    side = LOWER if t_lb[blk] <= t_ub[blk] else UPPER
                if self._add(blk, side):
                    changes += 1
                    skipped.clear()
                else:
                    skipped.add(blk)
            else:
                x = x + p
                at_min = True
        else:
            lam = self._multipliers(Q @ x + q)
        self.x = x
        self.total_changes += changes
        return QpSolution(x.copy(), self._dual_vector(lam), status, changes, it + 1)


def solve_qp(Q, q, A, lb, ub, tol=1e-10) -> QpSolution:
    """One-shot convenience wrapper around :class:`QpWorkspace`."""
    return QpWorkspace(Q, A, lb, ub, tol=tol).solve(q)
