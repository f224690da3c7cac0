"""A one-variable instance where the relaxation is NOT tight.

With two two-sided constraints on a single variable, the rank condition
fails (rank 1 > n-1 = 0 and p = 2 != n = 1) and the relaxation overshoots:
the true maximum is 1 while the relaxation reports 3.  The certificate says
so up front, and the brute-force oracle confirms the true value.
"""

import numpy as np

from socqp import Bound, SymMatrix, UqInstance, build_socp_uq, check_as3, solve
from socqp.oracle import grid_max_uq

# max x^2  s.t.  1 <= x^2 + 2x <= 3,  -1 <= x^2 - 2x <= 3
inst = UqInstance(
    1,
    SymMatrix.identity(1),
    np.array([[0.0], [1.0], [-1.0]]),
    np.zeros(3),
    [Bound(1.0, 3.0), Bound(-1.0, 3.0)],
)

prog, meta = build_socp_uq(inst)
res = solve(prog)
print(f"relaxation value   {meta.original_value(res):.6f}")

cert = check_as3(inst)
print(f"certificate        holds={cert.holds}  ({cert.reason})")

g = grid_max_uq(inst, h=1e-4)
print(f"true maximum       {g.value:.6f}  at x = {g.argmax[0]:.4f}  (grid oracle, +-{g.error_bound:.0e})")
print()
print("the gap 3 vs 1 is real: without the rank condition the relaxation")
print("value is only an upper bound, and the library never claims otherwise")
