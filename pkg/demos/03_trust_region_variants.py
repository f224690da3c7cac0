"""Trust-region subproblems through the lifted convex relaxation.

Covers the classic ball-constrained case (including hard-case geometry,
where the minimizer must be pushed onto the sphere along a ground
eigenvector), the two-sided ball band, and the variant with inside/outside
balls plus a polytope row.
"""

import numpy as np

from socqp import (
    SymMatrix,
    build_cr,
    build_trs,
    build_ttrs,
    build_vtrs,
    check_condition_c,
    lift_set_onesided,
    solve,
    tighten_qcqp,
)

# --- hard-case trust region: A = diag(-1, -1, 0), tiny linear term ---------
a = np.diag([-1.0, -1.0, 0.0])
b = np.array([0.0, 0.0, 0.01])
inst = build_trs(SymMatrix.from_dense(a), b)
lifted = lift_set_onesided(inst)
print("trust region, hard-case geometry")
print(f"  lifted blocks            {lifted}")
print(f"  exactness condition      {check_condition_c(inst, lifted).holds}")

prog, meta = build_cr(inst)
res = solve(prog)
print(f"  relaxation value         {meta.original_value(res):.9f}")

x, _ = tighten_qcqp(inst, res, meta)
print(f"  recovered ||x||          {np.linalg.norm(x):.9f}  (on the sphere)")
print(f"  objective at recovered   {x @ a @ x + 2 * b @ x:.9f}")
print()

# --- two-sided band: 1 <= ||x||^2 <= 4 with a concave objective ------------
prog, meta = build_ttrs(SymMatrix.from_dense(-np.eye(2)), np.zeros(2), 1.0, 4.0)
res = solve(prog)
print("two-sided ball band, min -||x||^2/2 over 1 <= ||x||^2 <= 4")
print(f"  optimum                  {meta.original_value(res):.9f}  (expected -2)")
print()

# --- variant with an outside ball and a halfspace ---------------------------
qmat = np.diag([0.8, -1.0])
prog, meta, rep = build_vtrs(
    SymMatrix.from_dense(qmat),
    np.array([0.2, 0.0]),
    balls_in=[(np.zeros(2), 1.2)],
    balls_out=[(np.zeros(2), 0.3)],
    poly_rows=[(np.array([1.0, 0.0]), 0.5)],
)
res = solve(prog)
print("trust-region variant (annulus + halfspace)")
print(f"  condition report         holds={rep.holds}  ({rep.reason})")
print(f"  optimum                  {meta.original_value(res):.9f}")
