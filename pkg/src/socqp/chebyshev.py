"""Chebyshev center of an intersection of balls with a certified quality
interval.

The candidate center comes from the simplex-weighted convex quadratic
program; its quality is certified by bracketing the farthest squared
distance max_{x in Omega} ||x - z||^2 between one relaxation solve (upper
end) and the feasible point produced by the bounded-ratio approximation on
the same inner problem (lower end).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model, recover, reformulate
from .conesolver import ConeProgram, SocBlock, SolveOptions, solve
from .errors import PreconditionViolated, SocqpError
from .model import BallIntersection, Bound, UqInstance

# interiority margin below which no ratio certificate is claimed
DEGENERATE_GAMMA = 1e-6


@dataclass(frozen=True)
class ChebyshevResult:
    """Candidate center with its certificate.

    ``attained`` brackets max_{x in Omega} ||x - center||^2; the chain
    guaranteed_ratio * v_dcc - tol <= attained[0] <= attained[1] <= v_dcc + tol
    holds on every certified run.
    """

    center: np.ndarray
    weights: np.ndarray
    v_dcc: float
    gamma: float
    gamma_upper: float
    attained: tuple[float, float]
    guaranteed_ratio: float
    far_point: np.ndarray


def _polish_simplex_qp(cost, amat, lam, objective):
    """Refine a simplex-constrained QP solution on its identified active set.

    Solves the equality-constrained KKT system over the support of ``lam``;
    accepted only when the polished weights stay in the simplex and do not
    worsen the objective.
    """
    p = lam.size
    support = np.flatnonzero(lam > 1e-7 * max(1.0, float(lam.max())))
    if support.size == 0:
        return lam, objective
    a_s = amat[:, support]
    k = support.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * a_s.T @ a_s
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([-cost[support], [1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return lam, objective
    cand = sol[:k]
    if cand.min() < -1e-9 or abs(cand.sum() - 1.0) > 1e-9:
        return lam, objective
    cand = np.clip(cand, 0.0, None)
    cand /= cand.sum()
    full = np.zeros(p)
    full[support] = cand
    value = float(cost @ full + np.sum((amat @ full) ** 2))
    if value <= objective + 1e-9 * (1.0 + abs(objective)):
        return full, value
    return lam, objective


def beck_center(
    balls: BallIntersection, opts: SolveOptions | None = None
) -> tuple[np.ndarray, np.ndarray, float]:
    """Simplex-weighted center: minimize sum_i w_i (r_i^2 - ||a_i||^2) +
    ||sum_i w_i a_i||^2 over the simplex; returns (center, weights, value).

    The cone solve is followed by an active-set polish so the center is
    accurate to machine precision on the identified support.
    """
    p, n = balls.p, balls.n
    nv = p + 1  # weights plus the epigraph of the squared norm
    c = np.zeros(nv)
    c[:p] = balls.radii**2 - np.sum(balls.centers**2, axis=1)
    c[p] = 1.0
    g = np.zeros((p, nv))
    g[:, :p] = -np.eye(p)
    h = np.zeros(p)
    e = np.zeros((1, nv))
    e[0, :p] = 1.0
    f = np.array([1.0])
    a = np.zeros((n + 1, nv))
    a[:n, :p] = balls.centers.T
    w_vec = np.zeros(nv)
    w_vec[p] = 1.0
    a[n] = 0.5 * w_vec
    b = np.zeros(n + 1)
    b[n] = -0.5
    soc = [SocBlock(a, b, 0.5 * w_vec, 0.5)]
    res = solve(ConeProgram(c=c, g=g, h=h, e=e, f=f, soc=soc), opts)
    if res.status != "Optimal":
        raise SocqpError(f"center solve ended with status {res.status}")
    lam = np.clip(res.z[:p], 0.0, None)
    lam = lam / lam.sum()
    value = float(c[:p] @ lam + np.sum((balls.centers.T @ lam) ** 2))
    lam, value = _polish_simplex_qp(c[:p], balls.centers.T, lam, value)
    center = balls.centers.T @ lam
    return center, lam, value


def _gamma_minmax(balls: BallIntersection, opts: SolveOptions | None = None):
    """Optimal value and minimizer of min_x max_i ||x - a_i|| / r_i."""
    n, p = balls.n, balls.p
    nv = n + 1  # (x, s)
    c = np.zeros(nv)
    c[n] = 1.0
    soc = []
    for i in range(p):
        a = np.zeros((n, nv))
        a[:, :n] = np.eye(n)
        ck = np.zeros(nv)
        ck[n] = balls.radii[i]
        soc.append(SocBlock(a, -balls.centers[i], ck, 0.0))
    res = solve(ConeProgram(c=c, soc=soc), opts)
    if res.status != "Optimal":
        raise SocqpError(f"interiority solve ended with status {res.status}")
    return float(res.objective), res.z[:n].copy()


def gamma_balls(balls: BallIntersection) -> float:
    """min over x of the largest scaled distance max_i ||x - a_i|| / r_i.

    At most 1 exactly when the intersection is nonempty, and below 1 exactly
    when it has interior; values above 1 are returned as-is and signal an
    empty intersection.
    """
    value, _ = _gamma_minmax(balls)
    return value


def gamma_upper(balls: BallIntersection) -> float:
    """Closed-form bound sqrt(n/(2(n+1))) * d_max / r_min on gamma_balls."""
    d_max = 0.0
    for i in range(balls.p):
        d = np.linalg.norm(balls.centers[i + 1 :] - balls.centers[i], axis=1)
        if d.size:
            d_max = max(d_max, float(d.max()))
    r_min = float(balls.radii.min())
    return math.sqrt(balls.n / (2.0 * (balls.n + 1.0))) * d_max / r_min


def _inner_instance(balls: BallIntersection, z: np.ndarray) -> UqInstance:
    """max ||x||^2 - 2 z'x over Omega as a uniform instance (Q = I)."""
    from .linalg import SymMatrix

    p, n = balls.p, balls.n
    b = np.zeros((p + 1, n))
    d = np.zeros(p + 1)
    b[0] = -z
    bounds = []
    for i in range(p):
        b[i + 1] = -balls.centers[i]
        d[i + 1] = float(balls.centers[i] @ balls.centers[i])
        bounds.append(Bound(-math.inf, balls.radii[i] ** 2))
    return UqInstance(n, SymMatrix.identity(n), b, d, bounds)


def chebyshev_certified(
    balls: BallIntersection,
    tol: float = 1e-6,
    opts: SolveOptions | None = None,
) -> ChebyshevResult:
    """Certified center of the smallest enclosing ball of the intersection.

    Requires nonempty interior (gamma < 1).  The farthest squared distance
    from the returned center is bracketed by one relaxation solve from above
    and an approximation-produced feasible point from below; the lower end is
    guaranteed to reach ((1-gamma)/(sqrt(2)+gamma))^2 of the center value.
    """
    center, lam, v_dcc = beck_center(balls, opts)
    gamma, interior = _gamma_minmax(balls, opts)
    g_up = gamma_upper(balls)
    if gamma >= 1.0 - DEGENERATE_GAMMA:
        kind = "empty" if gamma > 1.0 else "degenerate (no interior at tolerance)"
        raise PreconditionViolated(
            f"intersection is {kind}: min-max scaled distance gamma = {gamma:.9f}"
        )
    ratio = ((1.0 - gamma) / (math.sqrt(2.0) + gamma)) ** 2

    inner = _inner_instance(balls, center)
    shifted, offset = model.translate_origin(inner, interior)
    d0 = float(shifted.d[0])
    shifted.d = shifted.d.copy()
    shifted.d[0] = 0.0  # re-zero the objective offset; carried separately

    prog, meta = reformulate.build_socp_uq(shifted)
    res = solve(prog, opts)
    if res.status != "Optimal":
        raise SocqpError(f"inner relaxation ended with status {res.status}")
    znorm = float(center @ center)
    upper = meta.original_value(res) + d0 + znorm

    x_sh, _, cert = recover.approx_uq(shifted, opts=opts)
    far_point = x_sh + interior
    lower = cert.lower + d0 + znorm

    scale = 1.0 + abs(v_dcc)
    chain_tol = tol * scale
    if not (
        lower <= upper + chain_tol
        and upper <= v_dcc + chain_tol
        and v_dcc <= upper + chain_tol
        and lower >= ratio * v_dcc - chain_tol
    ):
        raise SocqpError(
            "certificate chain failed: "
            f"ratio*v={ratio * v_dcc:.6e}, lower={lower:.6e}, "
            f"upper={upper:.6e}, v_dcc={v_dcc:.6e}"
        )
    return ChebyshevResult(
        center=center,
        weights=lam,
        v_dcc=v_dcc,
        gamma=gamma,
        gamma_upper=g_up,
        attained=(lower, upper),
        guaranteed_ratio=ratio,
        far_point=far_point,
    )
