"""Steer two masses with friction to rest at the origin.

Friction switches sign with the velocity, which the complementarity pairs
encode through the auxiliary variable y in [0, 1].
"""

# %% setup
import numpy as np

from lcqp import solve
from lcqp.benchmarks import MovingMassesSpec, gen_moving_masses, masses_layout, masses_residuals

spec = MovingMassesSpec(s=2, N=50, T=2.0)
pb = gen_moving_masses(spec)
print(f"n = {pb.n}, n_A = {pb.n_A}, n_c = {pb.n_c}")

# %% solve
sol = solve(pb, print_level=1)
print(sol.status.value, f"{sol.wall_time:.2f} s, {sol.inner_iterations} QPs")

# %% residuals of the discretized dynamics
for key, val in masses_residuals(spec, sol.x).items():
    print(f"{key:>16}: {val:.2e}")

# %% a coarse look at the trajectory
lay = masses_layout(spec.s, spec.N)
p, v, u = sol.x[lay.p], sol.x[lay.v], sol.x[lay.u]
for k in range(0, spec.N + 1, 10):
    uk = u[k] if k < spec.N else np.nan
    print(f"t={k * spec.h:4.2f}  p={np.round(p[k], 3)}  v={np.round(v[k], 3)}  u={uk:7.3f}")
