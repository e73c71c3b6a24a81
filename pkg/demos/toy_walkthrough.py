"""Walk through the two-variable toy problem.

    min (x1 - 1)^2 + (x2 - 1)^2   s.t.   0 <= x1 _|_ x2 >= 0

Two strongly stationary points, (1, 0) and (0, 1), and a saddle of the
penalized problem sitting on the diagonal for every penalty value.
"""

# %% setup
import numpy as np

from lcqp import branch_enumerate, solve, verify_strong_stationarity
from lcqp.benchmarks import gen_toy

pb = gen_toy()
print(pb.n, pb.n_c, pb.n_A)

# %% default run
sol = solve(pb, print_level=1)
print("x =", sol.x, " objective =", sol.objective + pb.obj_const)

# %% the duals certify strong stationarity
ok, res = verify_strong_stationarity(pb, sol.x, sol.y_A, sol.y_L, sol.y_R, sol.y_x)
print("strongly stationary:", ok)
print({k: v for k, v in res.items() if k != "covered"})

# %% without the gradient perturbation the iterates ride the saddle
stuck = solve(pb, print_level=0, perturbation_scale=0.0)
print(stuck.status.value)
for rec in stuck.history[:6]:
    print(f"rho={rec.rho:8.3f}  x={rec.x}  2/(2+rho)={2 / (2 + rec.rho):.6f}")

# %% both corners are global minimizers
oracle = branch_enumerate(pb)
for br in oracle.branches:
    print(br.mask, br.status, np.round(br.x, 12), br.objective + pb.obj_const)
