"""Integers through binary complementarity pairs.

Each bit b satisfies 0 <= b _|_ 1 - b >= 0. The penalty b(1 - b) is
concave, so the merit is minimized by the full step and the line search
never shortens a step. The method is local: it returns integer points, but
not always the nearest one.
"""

# %% setup
import numpy as np

from lcqp import branch_enumerate, solve
from lcqp.benchmarks import gen_integer_qp, integer_qp_enumerate

# %% one problem in detail
pb = gen_integer_qp(bits=3, target=2.3)
sol = solve(pb, print_level=0, record_trace=True)
print("z =", sol.x[0], " bits =", sol.x[1:])
print("step lengths:", sorted({st.alpha for st in sol.trace}))
print("global:", integer_qp_enumerate(3, 2.3), " oracle branches:", len(branch_enumerate(pb).branches))

# %% with and without the regularization term
rng = np.random.default_rng(3)
for _ in range(8):
    bits = int(rng.integers(2, 6))
    target = float(rng.uniform(0, 2 ** bits - 1))
    z_best, _ = integer_qp_enumerate(bits, target)
    z = [solve(gen_integer_qp(bits=bits, target=target, regularize=r), print_level=0).x[0]
         for r in (False, True)]
    print(f"{bits} bits, target {target:6.2f}: best {z_best:3d}, plain {z[0]:4.0f}, regularized {z[1]:4.0f}")
