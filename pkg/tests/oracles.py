"""Independent reference computations used by the tests."""

import itertools

import mpmath
import numpy as np


def brute_force_qp(Q, q, A, lb, ub, feas_tol=1e-9):
    """Minimize 1/2 x'Qx + q'x over lb <= Ax <= ub by enumerating active sets.

    Only usable for a handful of rows. Returns ``(f, x)`` or ``None``.
    """
    m, n = A.shape
    best = None
    for choice in itertools.product((0, 1, -1), repeat=m):
        act = [i for i in range(m) if choice[i] != 0]
        if len(act) > n:
            continue
        if any((choice[i] == 1 and not np.isfinite(lb[i]))
               or (choice[i] == -1 and not np.isfinite(ub[i])) for i in act):
            continue
        Aw = A[act]
        b = np.array([lb[i] if choice[i] == 1 else ub[i] for i in act])
        k = len(act)
        K = np.block([[Q, Aw.T], [Aw, np.zeros((k, k))]])
        try:
            sol = np.linalg.solve(K, np.concatenate([-q, b]))
        except np.linalg.LinAlgError:
            continue
        x = sol[:n]
        Ax = A @ x
        if np.all(Ax >= lb - feas_tol) and np.all(Ax <= ub + feas_tol):
            f = 0.5 * x @ Q @ x + q @ x
            if best is None or f < best[0] - 1e-12:
                best = (f, x)
    return best


def golden_section(f, a=0.0, b=1.0, tol=1e-12, max_iter=200):
    """Minimizer of a unimodal scalar function on [a, b]."""
    invphi = (mpmath.sqrt(5) - 1) / 2 if isinstance(a, mpmath.mpf) else (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def merit_line_minimizer(Q, C, rho, g_lin, x, p, dps=50, tol=1e-15):
    """Minimizer over [0, 1] of ``a -> 1/2 z'(Q + rho C)z + g_lin'z`` with ``z = x + a p``.

    The function is evaluated in extended precision at three points, which
    determines it exactly since it is quadratic in ``a``; the interpolant
    is then minimized by golden-section search, also in extended precision.
    Plain double precision cannot place the minimizer of a flat quadratic
    much better than ``sqrt(eps)``.
    """
    with mpmath.workdps(dps):
        Hm = (mpmath.matrix(np.asarray(Q).tolist())
              + mpmath.mpf(rho) * mpmath.matrix(np.asarray(C).tolist()))
        gm = mpmath.matrix(np.asarray(g_lin).tolist())
        xm = mpmath.matrix(np.asarray(x).tolist())
        pm = mpmath.matrix(np.asarray(p).tolist())

        def psi(a):
            z = xm + a * pm
            return (z.T * Hm * z)[0] / 2 + (gm.T * z)[0]

        f0, fh, f1 = psi(mpmath.mpf(0)), psi(mpmath.mpf("0.5")), psi(mpmath.mpf(1))
        c2 = 2 * (f1 - 2 * fh + f0)
        c1 = f1 - f0 - c2

        def line(a):
            return c1 * a + c2 * a * a

        a = golden_section(line, mpmath.mpf(0), mpmath.mpf(1), tol=mpmath.mpf(tol), max_iter=400)
        return float(a)


def finite_difference_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return grad


def random_qp(rng, n=None, m=None):
    """Random strictly convex QP with a nonempty feasible set."""
    n = int(rng.integers(1, 6)) if n is None else n
    m = int(rng.integers(0, 8)) if m is None else m
    M = rng.normal(size=(n, n))
    Q = M @ M.T + 0.1 * np.eye(n)
    A = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    lb = A @ x0 - rng.uniform(0, 1, m)
    ub = A @ x0 + rng.uniform(0, 1, m)
    lb[rng.random(m) < 0.3] = -np.inf
    ub[rng.random(m) < 0.3] = np.inf
    eq = rng.random(m) < 0.15
    lb[eq] = ub[eq] = (A @ x0)[eq]
    return Q, A, lb, ub
