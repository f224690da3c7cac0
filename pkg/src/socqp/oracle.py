"""Brute-force ground truth for small instances.

Exhaustive grid search for uniform instances (n <= 3), a double grid for the
Chebyshev min-max problem (n <= 2), rejection sampling, and exact binary
enumeration for reduced ILPs.  These oracles back the derived expected values
in the test suite; they are not part of the solving path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from . import model
from .errors import EmptyFeasibleGrid, InvalidInput, UnboundedBox
from .model import BallIntersection, UqInstance


@dataclass(frozen=True)
class GridMax:
    """Best feasible grid point; ``error_bound`` is the Lipschitz bound L*h at
    the finest resolution reached."""

    value: float
    argmax: np.ndarray
    lipschitz: float
    error_bound: float


@dataclass(frozen=True)
class GridMinMax:
    value: float
    error_bound: float


def infer_box(inst: UqInstance, inflate: float = 1.1):
    """Bounding box from the ellipsoid rows (finite upper bounds).

    Each row with finite u_i bounds x inside an ellipsoid; the tightest of
    their bounding cubes, inflated, is returned.  Raises UnboundedBox when no
    row has a finite upper bound or Q is singular.
    """
    from . import linalg

    w, _ = linalg.sym_eig(inst.q)
    if w[-1] <= 1e-12 * max(1.0, abs(w[0])):
        raise UnboundedBox("box inference needs positive definite Q; pass a box")
    qd = inst.q.dense()
    best = None
    for i, bd in enumerate(inst.bounds):
        if not bd.has_upper:
            continue
        bi = inst.b[i + 1]
        qinv_b = np.linalg.solve(qd, bi)
        rhs = bd.upper - inst.d[i + 1] + float(bi @ qinv_b)
        if rhs < 0.0:
            raise EmptyFeasibleGrid(f"constraint {i + 1} is infeasible on its own")
        radius = (math.sqrt(rhs) + math.sqrt(max(0.0, float(bi @ qinv_b)))) / math.sqrt(w[-1])
        center = -qinv_b
        lo = center - inflate * radius
        hi = center + inflate * radius
        if best is None:
            best = (lo, hi)
        else:
            best = (np.maximum(best[0], lo), np.minimum(best[1], hi))
    if best is None:
        raise UnboundedBox("no finite upper bound; supply an explicit box")
    return best


def _axes(box, h):
    lo, hi = box
    return [np.arange(lo[k], hi[k] + 0.5 * h, h) for k in range(len(lo))]


def _eval_chunks(inst: UqInstance, points: np.ndarray, feas_tol: float):
    """Objective values of the feasible points among ``points`` (rows)."""
    qd = inst.q.dense()
    quad = np.einsum("pi,ij,pj->p", points, qd, points)
    feas = np.ones(points.shape[0], dtype=bool)
    for i, bd in enumerate(inst.bounds):
        vals = quad + 2.0 * points @ inst.b[i + 1] + inst.d[i + 1]
        if bd.has_upper:
            feas &= vals <= bd.upper + feas_tol
        if bd.has_lower:
            feas &= vals >= bd.lower - feas_tol
    obj = quad + 2.0 * points @ inst.b[0] + inst.d[0]
    return obj, feas


def _scan(inst, axes, feas_tol, keep):
    """Top-``keep`` feasible grid points by objective, chunked over axis 0."""
    sizes = [a.size for a in axes]
    rest = int(np.prod(sizes[1:])) if len(sizes) > 1 else 1
    group = max(1, (1 << 21) // max(rest, 1))
    tops: list[tuple[float, np.ndarray]] = []
    for start in range(0, sizes[0], group):
        first = axes[0][start : start + group]
        mesh = np.meshgrid(first, *axes[1:], indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        obj, feas = _eval_chunks(inst, pts, feas_tol)
        if not np.any(feas):
            continue
        idx = np.flatnonzero(feas)
        vals = obj[idx]
        take = idx[np.argsort(vals)[::-1][:keep]]
        tops.extend((float(obj[t]), pts[t].copy()) for t in take)
    tops.sort(key=lambda t: -t[0])
    return tops[:keep]


def grid_max_uq(
    inst: UqInstance,
    h: float,
    box=None,
    refine: int = 0,
    feas_tol: float = 1e-9,
    top_k: int = 8,
) -> GridMax:
    """Exhaustive feasible-grid maximization of f_0 for n <= 3.

    ``refine`` hierarchical passes shrink the step tenfold around the best
    candidates; the reported error bound is L*h at the finest step, with L
    the local Lipschitz bound of f_0 on the box.
    """
    if inst.n > 3:
        raise InvalidInput("grid oracle supports n <= 3")
    if h <= 0.0:
        raise InvalidInput("step must be positive")
    if box is None:
        box = infer_box(inst)
    else:
        box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
    tops = _scan(inst, _axes(box, h), feas_tol, top_k)
    if not tops:
        raise EmptyFeasibleGrid(f"no feasible grid point at resolution {h:g}")
    step = h
    for _ in range(refine):
        step /= 10.0
        nxt: list[tuple[float, np.ndarray]] = []
        for _, pt in tops:
            lo = np.maximum(box[0], pt - 2.2 * step * 10.0)
            hi = np.minimum(box[1], pt + 2.2 * step * 10.0)
            nxt.extend(_scan(inst, _axes((lo, hi), step), feas_tol, top_k))
        nxt.sort(key=lambda t: -t[0])
        tops = nxt[:top_k] or tops
    value, arg = tops[0]
    corner = np.maximum(np.abs(box[0]), np.abs(box[1]))
    lip = 2.0 * float(np.linalg.norm(inst.q.dense(), 2)) * float(
        np.linalg.norm(corner)
    ) + 2.0 * float(np.linalg.norm(inst.b[0]))
    return GridMax(value, arg, lip, lip * step)


def _omega_boundary(balls: BallIntersection, h: float):
    """Feasible boundary grid points of the ball intersection (n <= 2)."""
    lo = np.max(balls.centers - balls.radii[:, None], axis=0)
    hi = np.min(balls.centers + balls.radii[:, None], axis=0)
    if np.any(hi < lo):
        raise EmptyFeasibleGrid("ball bounding boxes do not intersect")
    axes = [np.arange(lo[k], hi[k] + 0.5 * h, h) for k in range(balls.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    feas = np.ones(pts.shape[0], dtype=bool)
    for i in range(balls.p):
        d2 = np.sum((pts - balls.centers[i]) ** 2, axis=1)
        feas &= d2 <= balls.radii[i] ** 2 + 1e-12
    mask = feas.reshape([a.size for a in axes])
    if not mask.any():
        raise EmptyFeasibleGrid(f"no feasible grid point at resolution {h:g}")
    eroded = scipy.ndimage.binary_erosion(mask, border_value=0)
    boundary = mask & ~eroded
    return pts[boundary.ravel()], pts[feas], (lo, hi)


def grid_minmax_cc(balls: BallIntersection, h: float, z_levels: int = 3) -> GridMinMax:
    """Double-grid value of min over z of max over the intersection of
    ||x - z||^2, for n <= 2.

    The inner max over the feasible grid is taken over its boundary points
    (exact for the grid set, since the objective is convex); the z grid is
    refined ``z_levels`` times around the incumbent.
    """
    if balls.n > 2:
        raise InvalidInput("Chebyshev grid oracle supports n <= 2")
    bound_pts, _, (lo, hi) = _omega_boundary(balls, h)

    def phi(zs: np.ndarray) -> np.ndarray:
        best = np.zeros(zs.shape[0])
        group = max(1, (1 << 22) // max(1, bound_pts.shape[0]))
        for start in range(0, zs.shape[0], group):
            zc = zs[start : start + group]
            d2 = (
                np.sum(zc**2, axis=1)[:, None]
                - 2.0 * zc @ bound_pts.T
                + np.sum(bound_pts**2, axis=1)[None, :]
            )
            best[start : start + group] = d2.max(axis=1)
        return best

    span = float(np.max(hi - lo))
    hz = max(span / 64.0, h)
    zlo, zhi = lo.copy(), hi.copy()
    incumbent = None
    for _ in range(max(1, z_levels)):
        axes = [np.arange(zlo[k], zhi[k] + 0.5 * hz, hz) for k in range(balls.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        zs = np.stack([m.ravel() for m in mesh], axis=1)
        vals = phi(zs)
        k = int(np.argmin(vals))
        incumbent = (float(vals[k]), zs[k])
        zlo = np.maximum(lo, zs[k] - 2.0 * hz)
        zhi = np.minimum(hi, zs[k] + 2.0 * hz)
        if hz <= h:
            break
        hz = max(h, hz / 8.0)
    value = incumbent[0]
    lip = 2.0 * math.sqrt(max(value, 0.0))
    return GridMinMax(value, lip * (h + hz) * math.sqrt(balls.n))


def sample_max_uq(inst: UqInstance, count: int, seed: int, around=None) -> float:
    """Best feasible objective among ``count`` random samples (a valid lower
    bound on the optimum); -inf when nothing feasible was drawn."""
    if around is None:
        around = np.zeros(inst.n)
    around = np.asarray(around, dtype=float).reshape(inst.n)
    if not model.is_feasible(inst, around):
        raise InvalidInput("sampling needs a feasible anchor point")
    if count <= 0:
        return -math.inf
    try:
        lo, hi = infer_box(inst)
        radius = 0.5 * float(np.max(hi - lo))
    except (UnboundedBox, EmptyFeasibleGrid):
        radius = 1.0
    rng = np.random.default_rng(seed)
    scales = np.array([0.05, 0.15, 0.3, 0.6, 1.0])
    pts = around[None, :] + rng.standard_normal((count, inst.n)) * (
        radius * scales[np.arange(count) % scales.size][:, None]
    )
    obj, feas = _eval_chunks(inst, pts, feas_tol=0.0)
    anchor_val = model.eval_f(inst, 0, around)
    if not np.any(feas):
        return anchor_val
    return max(anchor_val, float(obj[feas].max()))


def binary_max_uq(inst: UqInstance, limit: int = 20):
    """Exact maximum of f_0 over the binary points feasible for ``inst``.

    Exhaustive over {0,1}^n; intended for reduced ILP instances where the
    feasible set is exactly a set of binary points and the arithmetic is
    integral, hence exact.
    """
    if inst.n > limit:
        raise InvalidInput(f"binary enumeration limited to n <= {limit}")
    best = None
    for bits in range(1 << inst.n):
        x = np.array([(bits >> k) & 1 for k in range(inst.n)], dtype=float)
        if model.worst_violation(inst, x) <= 0.0:
            val = model.eval_f(inst, 0, x)
            if best is None or val > best[0]:
                best = (val, x)
    if best is None:
        raise EmptyFeasibleGrid("no feasible binary point")
    return best
