"""Binary linear programs as uniform quadratic instances.

Any 0/1 ILP embeds into the uniform-Hessian format: the equality row
x'x = e'x together with the box rows forces binary coordinates, and the
objective collapses to c'x on binary points.  This is why the problem class
stays NP-hard once the constraint count passes n + 1, and why the
certificates matter: they carve out the tractable cases.
"""

import numpy as np

from socqp import ilp_to_uq
from socqp.oracle import binary_max_uq

# a small knapsack: max 4x1 + 3x2 + 2x3  s.t.  2x1 + 3x2 + x3 <= 4
c = np.array([4.0, 3.0, 2.0])
rows = np.array([[2.0, 3.0, 1.0]])
rhs = np.array([4.0])

inst = ilp_to_uq(c, rows, rhs)
print(f"reduced instance: n = {inst.n}, p = {inst.p} constraints "
      f"({rows.shape[0]} knapsack + 1 equality + {inst.n} box rows)")

value, arg = binary_max_uq(inst)
print(f"optimum over binary points  {value:.1f} at x = {arg.astype(int)}")

# brute-force the ILP directly to confirm
best = max(
    (c @ np.array([(k >> j) & 1 for j in range(3)]), k)
    for k in range(8)
    if rows @ np.array([(k >> j) & 1 for j in range(3)]) <= rhs
)
print(f"direct enumeration          {best[0]:.1f}")
