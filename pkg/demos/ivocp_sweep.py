"""Optimal control of a switched ODE, solved from several initial guesses.

The state follows xdot = 3 for x < 0 and xdot = 1 for x > 0 and may stick
at zero. Only the initial value x_0 is free, so a fine scan over x_0 with
forward simulation gives the global optimum for comparison.
"""

# %% setup
import time

import numpy as np

from lcqp import solve
from lcqp.benchmarks import gen_ivocp, ivocp_layout, ivocp_scan, simulate_ivocp

N = 50
x0_best, f_best = ivocp_scan(N)
print(f"scan: x0 = {x0_best:.6f}, objective = {f_best:.8f}")

# %% solve from each initial guess
for guess in np.linspace(-1.9, -0.9, 5):
    pb = gen_ivocp(N=N, x0_guess=guess)
    t0 = time.perf_counter()
    sol = solve(pb, print_level=0, solve_zero_penalty_first=False)
    dt = time.perf_counter() - t0
    f = sol.objective + pb.obj_const
    print(f"guess {guess:+.3f}: {sol.status.value:>8}  x0 = {sol.x[0]:+.6f}  "
          f"objective = {f:.8f}  gap = {(f - f_best) / f_best:.1e}  ({dt:.2f} s)")

# %% the returned trajectory is the simulated one
ix, iy, _ = ivocp_layout(N)
x_sim, y_sim, _ = simulate_ivocp(sol.x[0], N)
print("max state difference:", np.max(np.abs(sol.x[ix] - x_sim)))
print("stage switches at k =", np.flatnonzero(np.diff(np.round(sol.x[iy], 6)))[:5])
