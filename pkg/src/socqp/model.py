"""Problem-instance data model and normalization transforms.

Holds the uniform quadratic instance (shared Hessian), the structured QCQP
instance with {-1,0,1} sign coefficients over PSD blocks, ball intersections
for the Chebyshev pipeline, and the ILP-to-uniform-QP reduction.

Linear terms follow the 2b'x convention throughout: the i-th function is
f_i(x) = x'Qx + 2 b_i'x + d_i, and instance files store the b_i of that
convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    EmptyInterior,
    InvalidBounds,
    InvalidIndex,
    InvalidInput,
    NotPositiveDefinite,
    WrongShape,
)
from .linalg import SymMatrix

# Default absolute tolerance on constraint values when testing feasibility.
DEFAULT_FEAS_TOL = 1e-6


@dataclass(frozen=True)
class Bound:
    """Two-sided bound; lower may be -inf and upper +inf.

    The infinities are tags, never operated on arithmetically: every consumer
    branches on ``has_lower``/``has_upper`` before touching the value.
    """

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise InvalidBounds("bounds must not be NaN")
        if self.lower > self.upper:
            raise InvalidBounds(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def has_lower(self) -> bool:
        return self.lower > -math.inf

    @property
    def has_upper(self) -> bool:
        return self.upper < math.inf

    def contains(self, value: float, tol: float = 0.0) -> bool:
        if self.has_lower and value < self.lower - tol:
            return False
        if self.has_upper and value > self.upper + tol:
            return False
        return True

    def violation(self, value: float) -> float:
        v = 0.0
        if self.has_lower:
            v = max(v, self.lower - value)
        if self.has_upper:
            v = max(v, value - self.upper)
        return v


@dataclass
class UqInstance:
    """Uniform QCQP: maximize f_0 subject to l_i <= f_i(x) <= u_i.

    All functions share the Hessian Q: f_i(x) = x'Qx + 2 b_i'x + d_i.
    Index 0 is the objective; constraints are 1..p.
    """

    n: int
    q: SymMatrix
    b: np.ndarray  # (p+1, n); row 0 is the objective linear term
    d: np.ndarray  # (p+1,)
    bounds: list[Bound]

    def __post_init__(self):
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.d = np.asarray(self.d, dtype=float).reshape(-1)
        if self.q.n != self.n:
            raise InvalidInput(f"Q order {self.q.n} != n {self.n}")
        if self.b.shape[1] != self.n:
            raise InvalidInput("linear terms must have length n")
        if self.b.shape[0] != self.d.size or self.b.shape[0] != len(self.bounds) + 1:
            raise InvalidInput("need p+1 linear terms, p+1 offsets, p bounds")
        if len(self.bounds) < 1:
            raise InvalidInput("at least one constraint is required")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.d))):
            raise InvalidInput("instance data must be finite")

    @property
    def p(self) -> int:
        return len(self.bounds)


@dataclass
class QcqpInstance:
    """Structured QCQP with PSD blocks Q_j and sign coefficients in {-1,0,1}.

    g_i(x) = sum_j a[i,j] x'Q_j x + 2 b_i'x + c_i; row 0 of ``a`` is the
    objective.  ``sense`` is "min" or "max" for g_0.
    """

    n: int
    blocks: list[SymMatrix]
    a: np.ndarray  # (p+1, m) signs
    b: np.ndarray  # (p+1, n)
    c: np.ndarray  # (p+1,)
    bounds: list[Bound]
    sense: str = "min"
    psd_tol: float = linalg.DEFAULT_RANK_TOL

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if self.sense not in ("min", "max"):
            raise InvalidInput(f"sense must be 'min' or 'max', got {self.sense!r}")
        m = len(self.blocks)
        if self.a.shape != (len(self.bounds) + 1, m):
            raise InvalidInput("sign matrix must be (p+1) x m")
        if self.b.shape != (len(self.bounds) + 1, self.n):
            raise InvalidInput("linear terms must be (p+1) x n")
        if self.c.size != len(self.bounds) + 1:
            raise InvalidInput("need p+1 scalar offsets")
        if not np.all(np.isin(self.a, (-1.0, 0.0, 1.0))):
            raise InvalidInput("sign coefficients must lie in {-1, 0, 1}")
        for j, q in enumerate(self.blocks):
            if q.n != self.n:
                raise InvalidInput(f"block {j} has order {q.n}, expected {self.n}")
            w, _ = linalg.sym_eig(q)
            if w.size and w[-1] < -self.psd_tol * max(1.0, w[0]):
                raise InvalidInput(f"block {j} is not PSD at tolerance {self.psd_tol}")

    @property
    def p(self) -> int:
        return len(self.bounds)

    @property
    def m(self) -> int:
        return len(self.blocks)

    def eval_g(self, i: int, x) -> float:
        x = np.asarray(x, dtype=float)
        if not 0 <= i <= self.p:
            raise InvalidIndex(f"index {i} out of range 0..{self.p}")
        val = 2.0 * float(self.b[i] @ x) + float(self.c[i])
        for j, q in enumerate(self.blocks):
            if self.a[i, j] != 0.0:
                val += self.a[i, j] * q.quad(x)
        return val

    def is_feasible(self, x, tol: float = DEFAULT_FEAS_TOL) -> bool:
        return all(
            bd.contains(self.eval_g(i + 1, x), tol) for i, bd in enumerate(self.bounds)
        )


@dataclass
class BallIntersection:
    """Intersection of p Euclidean balls ||x - a_i|| <= r_i."""

    n: int
    centers: np.ndarray  # (p, n)
    radii: np.ndarray  # (p,)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if self.centers.shape != (self.radii.size, self.n):
            raise InvalidInput("centers must be (p, n) with one radius each")
        if self.radii.size < 1:
            raise InvalidInput("at least one ball is required")
        if np.any(self.radii <= 0.0) or not np.all(np.isfinite(self.radii)):
            raise InvalidInput("radii must be positive and finite")
        if not np.all(np.isfinite(self.centers)):
            raise InvalidInput("centers must be finite")

    @property
    def p(self) -> int:
        return self.radii.size

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        dist = np.linalg.norm(self.centers - x[None, :], axis=1)
        return bool(np.all(dist <= self.radii + tol))


@dataclass(frozen=True)
class AffineMap:
    """x = matrix @ y + shift, with an objective offset carried alongside."""

    matrix: np.ndarray
    shift: np.ndarray
    obj_offset: float = 0.0

    def apply(self, y) -> np.ndarray:
        return self.matrix @ np.asarray(y, dtype=float) + self.shift


def eval_f(inst: UqInstance, i: int, x) -> float:
    """Evaluate f_i(x) = x'Qx + 2 b_i'x + d_i."""
    if not 0 <= i <= inst.p:
        raise InvalidIndex(f"index {i} out of range 0..{inst.p}")
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise InvalidInput(f"point must have length {inst.n}")
    return inst.q.quad(x) + 2.0 * float(inst.b[i] @ x) + float(inst.d[i])


def worst_violation(inst: UqInstance, x) -> float:
    """Largest constraint-bound violation at x (0 when feasible)."""
    return max(
        bd.violation(eval_f(inst, i + 1, x)) for i, bd in enumerate(inst.bounds)
    )


def is_feasible(inst: UqInstance, x, tol: float = DEFAULT_FEAS_TOL) -> bool:
    """True iff every constraint value lies within its bounds +- tol."""
    return worst_violation(inst, x) <= tol


def normalize_uq(inst: UqInstance) -> tuple[UqInstance, AffineMap]:
    """Rewrite a positive definite instance with Q = I via y = Q^(1/2) x.

    The output has linear terms c_i = Q^(-1/2) b_i, bounds shifted by d_i and
    all offsets zero; the returned map sends y back to x = Q^(-1/2) y and
    carries d_0 so objective values can be reconstructed.
    """
    w, v = linalg.sym_eig(inst.q)
    if w[-1] <= linalg.DEFAULT_RANK_TOL * max(1.0, w[0]):
        raise NotPositiveDefinite("normalization requires positive definite Q")
    inv_root = (v / np.sqrt(w)) @ v.T
    c = inst.b @ inv_root  # rows c_i' = b_i' Q^{-1/2}
    bounds = [
        Bound(
            bd.lower - inst.d[i + 1] if bd.has_lower else -math.inf,
            bd.upper - inst.d[i + 1] if bd.has_upper else math.inf,
        )
        for i, bd in enumerate(inst.bounds)
    ]
    out = UqInstance(
        inst.n,
        SymMatrix.identity(inst.n),
        c,
        np.zeros(inst.p + 1),
        bounds,
    )
    back = AffineMap(inv_root, np.zeros(inst.n), obj_offset=float(inst.d[0]))
    return out, back


def translate_origin(inst: UqInstance, x_hat) -> tuple[UqInstance, float]:
    """Shift coordinates so that x_hat becomes the origin.

    The output instance satisfies f'_i(x) = f_i(x + x_hat) for every x; the
    returned offset is f_0(x_hat), letting callers re-zero d'_0 when needed.
    """
    x_hat = np.asarray(x_hat, dtype=float).reshape(inst.n)
    qx = inst.q @ x_hat
    b = inst.b + qx[None, :]
    d = np.array([eval_f(inst, i, x_hat) for i in range(inst.p + 1)])
    out = UqInstance(inst.n, inst.q, b, d, list(inst.bounds))
    return out, float(d[0])


def find_interior_point(inst: UqInstance, tol: float = 1e-8):
    """Point with strictly positive slack in every upper bound, plus its margin.

    Solves max s subject to t + 2 b_i'x + d_i + s <= u_i and x'Qx <= t with
    the cone solver.  Requires the one-sided convex shape (every l_i = -inf,
    every u_i finite).
    """
    from . import conesolver  # deferred; conesolver depends on this module

    if any(bd.has_lower for bd in inst.bounds):
        raise WrongShape("interior-point search expects all lower bounds = -inf")
    if not all(bd.has_upper for bd in inst.bounds):
        raise WrongShape("interior-point search expects every upper bound finite")

    n, p = inst.n, inst.p
    nv = n + 2  # variables (x, t, s)
    c = np.zeros(nv)
    c[n + 1] = -1.0  # maximize s
    g = np.zeros((p, nv))
    h = np.zeros(p)
    for i, bd in enumerate(inst.bounds):
        g[i, :n] = 2.0 * inst.b[i + 1]
        g[i, n] = 1.0
        g[i, n + 1] = 1.0
        h[i] = bd.upper - inst.d[i + 1]
    root = linalg.psd_sqrt(inst.q).dense()
    a = np.zeros((n + 1, nv))
    a[:n, :n] = root
    a[n, n] = 0.5
    bvec = np.zeros(n + 1)
    bvec[n] = -0.5
    ck = np.zeros(nv)
    ck[n] = 0.5
    soc = [conesolver.SocBlock(a, bvec, ck, 0.5)]
    prog = conesolver.ConeProgram(c=c, g=g, h=h, soc=soc)
    res = conesolver.solve(prog)
    if res.status != "Optimal":
        raise EmptyInterior(f"interior search ended with status {res.status}")
    margin = -res.objective
    if margin <= tol:
        raise EmptyInterior(f"best margin {margin:.3e} is within tolerance {tol:g}")
    return res.z[:n].copy(), float(margin)


def ilp_to_uq(c, a_rows, rhs) -> UqInstance:
    """Reduce a binary ILP (max c'x, a_i'x <= rhs_i, x in {0,1}^n) to a UQ.

    Builds the uniform-Hessian instance whose feasible set is exactly the
    ILP's binary feasible set: objective x'x + (c - e)'x, the m knapsack rows,
    the equality 0 <= x'x - e'x <= 0, and n box rows 0 <= x'x + (e_j - e)'x <= 1.
    Stored linear terms are halved per the 2b'x convention.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    a_rows = np.asarray(a_rows, dtype=float).reshape(-1, n) if np.size(a_rows) else np.zeros((0, n))
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    if a_rows.shape[0] != rhs.size:
        raise InvalidInput("one rhs per constraint row is required")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a_rows)) and np.all(np.isfinite(rhs))):
        raise InvalidInput("ILP data must be finite")
    m = rhs.size
    e = np.ones(n)
    b = np.zeros((m + n + 2, n))
    d = np.zeros(m + n + 2)
    bounds: list[Bound] = []
    b[0] = (c - e) / 2.0
    for i in range(m):
        b[1 + i] = (a_rows[i] - e) / 2.0
        bounds.append(Bound(-math.inf, float(rhs[i])))
    b[1 + m] = -e / 2.0
    bounds.append(Bound(0.0, 0.0))
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = 1.0
        b[2 + m + j] = (ej - e) / 2.0
        bounds.append(Bound(0.0, 1.0))
    return UqInstance(n, SymMatrix.identity(n), b, d, bounds)


def uq_as_qcqp(inst: UqInstance, negate: bool = False) -> QcqpInstance:
    """View a UQ instance as a single-block structured QCQP.

    With ``negate`` the objective is flipped so the result is a minimization
    of -f_0, matching the builders that require min sense.
    """
    sgn = -1.0 if negate else 1.0
    p = inst.p
    a = np.ones((p + 1, 1))
    a[0, 0] = sgn
    b = inst.b.copy()
    b[0] *= sgn
    cvec = inst.d.copy()
    cvec[0] *= sgn
    return QcqpInstance(
        inst.n,
        [inst.q],
        a,
        b,
        cvec,
        list(inst.bounds),
        sense="min",
    )
