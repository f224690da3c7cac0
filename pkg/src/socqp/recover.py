"""Exact-solution extraction from relaxation optima and the bounded-ratio
approximation for convex-constrained uniform instances.

The tightening procedures walk a relaxation optimum along directions that
leave the linear rows unchanged until the lifted cone closes, following the
constructive exactness arguments; the approximation routine splits the
relaxation optimum into two cone-tight candidates and scales the better one
back into the feasible region, certifying
f_0(x) >= ((1-gamma)/(sqrt(2)+gamma))^2 * v(relaxation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg, model, reformulate
from .conesolver import SolveOptions, SolverResult, solve
from .errors import (
    ConditionNotMet,
    InvalidInstance,
    PreconditionViolated,
    TightenFailed,
    WrongShape,
)
from .model import QcqpInstance, UqInstance

_ACTIVE_SLACK = 1e-7


@dataclass
class TightenTrace:
    """Log of one tightening run: each step records the direction used, the
    step taken, and what closed or activated."""

    steps: list[dict] = field(default_factory=list)
    final_gap: float = math.nan
    active_history: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class ApproxTrace:
    """All intermediate quantities of one approximation run."""

    y: np.ndarray
    alpha: float
    s1: np.ndarray
    s2: np.ndarray
    t1: float
    t2: float
    j_bar: int
    x_bar: np.ndarray
    tau_bar: float
    gamma: float
    guaranteed_ratio: float
    shortcut: bool = False


@dataclass(frozen=True)
class ApproxCertificate:
    lower: float  # f_0 at the returned point
    upper: float  # relaxation value
    gamma: float
    guaranteed_ratio: float


def _halves_interval(inst: UqInstance, x, t, direction):
    """Feasible step interval E = {eps : all rows hold at x + eps*direction}."""
    lo, hi = -math.inf, math.inf
    for i, bd in enumerate(inst.bounds):
        val = t + 2.0 * float(inst.b[i + 1] @ x) + float(inst.d[i + 1])
        slope = 2.0 * float(inst.b[i + 1] @ direction)
        if abs(slope) < 1e-14:
            continue
        if bd.has_upper:
            room = (bd.upper - val) / slope
            if slope > 0:
                hi = min(hi, room)
            else:
                lo = max(lo, room)
        if bd.has_lower:
            room = (bd.lower - val) / slope
            if slope > 0:
                lo = max(lo, room)
            else:
                hi = min(hi, room)
    return lo, hi


def _active_rows(inst: UqInstance, x, t):
    active = []
    for i, bd in enumerate(inst.bounds):
        val = t + 2.0 * float(inst.b[i + 1] @ x) + float(inst.d[i + 1])
        tol = _ACTIVE_SLACK * (
            1.0
            + (abs(bd.upper) if bd.has_upper else 0.0)
            + (abs(bd.lower) if bd.has_lower else 0.0)
        )
        at_upper = bd.has_upper and abs(val - bd.upper) <= tol
        at_lower = bd.has_lower and abs(val - bd.lower) <= tol
        if at_upper or at_lower:
            active.append((i, bd.upper if at_upper else bd.lower))
    return active


def _direction_in_null(null_cols: np.ndarray, b0: np.ndarray):
    """A unit direction in the given null space, preferring b0-orthogonality."""
    if null_cols.shape[1] == 0:
        return None
    w = null_cols.T @ b0
    nw = np.linalg.norm(w)
    if nw <= 1e-12 * (1.0 + np.linalg.norm(b0)):
        return null_cols[:, 0]
    if null_cols.shape[1] >= 2:
        comp = linalg.null_space_of_rows([w], null_cols.shape[1])
        if comp.shape[1]:
            return null_cols @ comp[:, 0]
    return null_cols[:, 0]


def _full_active_solve(inst: UqInstance, x, t, trace, tol):
    """p = n branch: all rows active with full-rank coefficients; the cone is
    closed by sliding t along the one-dimensional family B x = delta - t e."""
    active = _active_rows(inst, x, t)
    if len(active) != inst.n:
        raise TightenFailed(
            f"stuck with {len(active)} active rows; need all {inst.n}", trace
        )
    bmat = 2.0 * np.vstack([inst.b[i + 1] for i, _ in active])
    delta = np.array([hit for _, hit in active])
    try:
        q0 = np.linalg.solve(bmat, delta)
        q1 = np.linalg.solve(bmat, np.ones(inst.n))
    except np.linalg.LinAlgError as exc:
        raise TightenFailed("active coefficient matrix is singular", trace) from exc
    qd = inst.q.dense()
    a2 = float(q1 @ qd @ q1)
    a1 = -2.0 * float(q0 @ qd @ q1) - 1.0
    a0 = float(q0 @ qd @ q0)
    disc = a1 * a1 - 4.0 * a2 * a0
    if a2 <= 0.0 or disc < 0.0:
        raise TightenFailed("one-dimensional slide has no real crossing", trace)
    roots = sorted(((-a1 - math.sqrt(disc)) / (2 * a2), (-a1 + math.sqrt(disc)) / (2 * a2)))
    slope = 1.0 - 2.0 * float(inst.b[0] @ q1)
    t_new = roots[1] if slope >= 0.0 else roots[0]
    x_new = q0 - t_new * q1
    trace.steps.append(
        {"kind": "slide", "t": t_new, "objective_slope": slope, "roots": tuple(roots)}
    )
    return x_new, t_new


def tighten_uq(
    inst: UqInstance,
    res: SolverResult,
    tol: float = 1e-8,
    meta: reformulate.ReformulationMeta | None = None,
) -> tuple[np.ndarray, TightenTrace]:
    """Turn a relaxation optimum of a uniform instance into a feasible point
    of the original problem with the same objective value.

    Requires the exactness certificate (rank condition or p = n) to hold and
    Q positive definite.  Walks x along directions orthogonal to the active
    rows; each move either closes the cone x'Qx = t or activates a new
    independent row, in at most n + p steps.
    """
    if res.status != "Optimal":
        raise PreconditionViolated(f"tightening needs an Optimal solve, got {res.status}")
    cert = reformulate.check_as3(inst)
    if not cert.holds:
        raise ConditionNotMet(f"exactness condition fails: {cert.reason}")
    meta = meta or reformulate.ReformulationMeta(kind="uq", n=inst.n, sense="max")
    x = meta.x_of(res.z)
    t = float(res.z[inst.n])
    value = -res.objective
    qd = inst.q.dense()
    trace = TightenTrace()
    for _ in range(inst.n + inst.p):
        gap = t - float(x @ qd @ x)
        trace.final_gap = gap
        if gap <= 1e-6 * (1.0 + abs(t)):
            break
        active = _active_rows(inst, x, t)
        trace.active_history.append(tuple(i for i, _ in active))
        null = linalg.null_space_of_rows([inst.b[i + 1] for i, _ in active], inst.n)
        direction = _direction_in_null(null, inst.b[0])
        if direction is None:
            if inst.p == inst.n:
                x, t = _full_active_solve(inst, x, t, trace, tol)
                trace.final_gap = t - float(x @ qd @ x)
                break
            raise TightenFailed("no move direction left and p != n", trace)
        lo, hi = _halves_interval(inst, x, t, direction)
        a2 = float(direction @ qd @ direction)
        a1 = float(direction @ qd @ x)
        a0 = float(x @ qd @ x) - t
        disc = a1 * a1 - a2 * a0
        rt = math.sqrt(max(disc, 0.0))
        eps_pos = (-a1 + rt) / a2
        eps_neg = (-a1 - rt) / a2
        candidates = [e for e in (eps_pos, eps_neg) if lo - 1e-12 <= e <= hi + 1e-12]
        if candidates:
            eps = min(candidates, key=abs)
            x = x + eps * direction
            trace.final_gap = t - float(x @ qd @ x)
            trace.steps.append(
                {"kind": "close", "eps": eps, "direction": direction.copy(),
                 "gap": trace.final_gap}
            )
            break
        finite_ends = [e for e in (lo, hi) if math.isfinite(e)]
        if not finite_ends:
            raise TightenFailed("unbounded move interval without a cone crossing", trace)
        eps = max(finite_ends, key=lambda e: a2 * e * e + 2 * a1 * e + a0)
        x = x + eps * direction
        trace.steps.append(
            {"kind": "endpoint", "eps": eps, "direction": direction.copy(),
             "gap": t - float(x @ qd @ x)}
        )
    else:
        raise TightenFailed("iteration cap reached before the cone closed", trace)

    gap = t - float(x @ qd @ x)
    trace.final_gap = gap
    fx = model.eval_f(inst, 0, x)
    scale = 1.0 + abs(value)
    if gap > 1e-6 * (1.0 + abs(t)) or abs(fx - value) > 1e-5 * scale:
        raise TightenFailed(
            f"residual gap {gap:.2e} or objective drift {fx - value:.2e} too large",
            trace,
        )
    if not model.is_feasible(inst, x, tol=1e-6 * (1.0 + float(np.abs(inst.d).max()))):
        raise TightenFailed("tightened point is infeasible", trace)
    return x, trace


def tighten_qcqp(
    inst: QcqpInstance,
    res: SolverResult,
    meta: reformulate.ReformulationMeta,
    tol: float = 1e-8,
) -> tuple[np.ndarray, TightenTrace]:
    """Close every open lifted cone of a structured relaxation optimum.

    For each lifted block j with x'Q_j x < t_j, moves x along a direction in
    span{b_1..b_p}^perp intersected with R(Q_j) and the null spaces of the
    other blocks; the exactness condition guarantees such a direction exists,
    and the move changes neither the linear rows nor the other blocks.
    """
    if res.status != "Optimal":
        raise PreconditionViolated(f"tightening needs an Optimal solve, got {res.status}")
    x = meta.x_of(res.z)
    if meta.x_shift is not None:
        x = x - meta.x_shift  # work in instance coordinates
    trace = TightenTrace()
    if not meta.lifted:
        trace.final_gap = 0.0
        if meta.x_shift is not None:
            x = x + meta.x_shift
        return x, trace
    b_rows = [inst.b[i + 1] for i in range(inst.p)]
    for j in meta.lifted:
        qj = inst.blocks[j].dense()
        tj = float(res.z[meta.t_index[j]])
        gap = tj - float(x @ qj @ x)
        if gap <= tol * (1.0 + abs(tj)):
            continue
        rows = list(b_rows)
        rows.extend(linalg.null_basis(inst.blocks[j]).columns.T)
        for i in range(inst.m):
            if i != j:
                rows.extend(linalg.range_basis(inst.blocks[i]).columns.T)
        subspace = linalg.null_space_of_rows(rows, inst.n)
        if subspace.shape[1] == 0:
            raise ConditionNotMet(
                f"no tightening direction for block {j}; the exactness "
                "condition does not hold numerically"
            )
        direction = _direction_in_null(subspace, inst.b[0])
        a2 = float(direction @ qj @ direction)
        if a2 <= 0.0:
            raise ConditionNotMet(f"direction has no energy in block {j}")
        a1 = float(direction @ qj @ x)
        a0 = float(x @ qj @ x) - tj
        rt = math.sqrt(max(a1 * a1 - a2 * a0, 0.0))
        roots = ((-a1 + rt) / a2, (-a1 - rt) / a2)
        drift = float(inst.b[0] @ direction)
        if abs(drift) <= 1e-12 * (1.0 + np.linalg.norm(inst.b[0])):
            alpha = min(roots, key=abs)
        else:
            # exactly one root weakly improves the minimization objective
            alpha = min(roots, key=lambda r: 2.0 * r * drift)
        x = x + alpha * direction
        trace.steps.append(
            {"kind": "block_close", "block": j, "alpha": alpha, "direction": direction.copy()}
        )
    gaps = [
        float(res.z[meta.t_index[j]]) - inst.blocks[j].quad(x) for j in meta.lifted
    ]
    trace.final_gap = max(gaps, default=0.0)
    if trace.final_gap > 1e-6 * (1.0 + max(abs(float(res.z[meta.t_index[j]])) for j in meta.lifted)):
        raise TightenFailed("a lifted gap stayed open", trace)
    if meta.x_shift is not None:
        x = x + meta.x_shift
    return x, trace


# ---------------------------------------------------------------------------
# approximation for convex-constrained instances
# ---------------------------------------------------------------------------


def gamma_uq(inst: UqInstance) -> float:
    """max_i ||Q^(-1/2) b_i|| / sqrt(u_i - d_i + ||Q^(-1/2) b_i||^2); < 1
    exactly when the origin is strictly interior."""
    try:
        cho = scipy.linalg.cho_factor(inst.q.dense())
    except scipy.linalg.LinAlgError as exc:
        raise InvalidInstance("gamma needs positive definite Q") from exc
    worst = 0.0
    for i, bd in enumerate(inst.bounds):
        if not bd.has_upper:
            raise WrongShape("gamma is defined for finite upper bounds only")
        bi = inst.b[i + 1]
        nrm2 = float(bi @ scipy.linalg.cho_solve(cho, bi))
        radicand = bd.upper - inst.d[i + 1] + nrm2
        if radicand <= 0.0:
            raise InvalidInstance(f"constraint {i + 1} has nonpositive radicand")
        worst = max(worst, math.sqrt(nrm2) / math.sqrt(radicand))
    return worst


def tau_bar(inst: UqInstance, x_bar, tol: float = 0.0) -> float:
    """Largest tau in [0,1] with f_i(tau x_bar) <= u_i for every i.

    Each constraint gives a convex quadratic in tau with f_i(0) = d_i < u_i,
    so the per-constraint maximum is a closed-form root clamped to [0,1].
    """
    x_bar = np.asarray(x_bar, dtype=float).reshape(inst.n)
    for i, bd in enumerate(inst.bounds):
        if bd.has_upper and inst.d[i + 1] > bd.upper + tol:
            raise PreconditionViolated("origin is not feasible")
    quad = inst.q.quad(x_bar)
    best = 1.0
    for i, bd in enumerate(inst.bounds):
        if not bd.has_upper:
            continue
        lin = 2.0 * float(inst.b[i + 1] @ x_bar)
        room = bd.upper - inst.d[i + 1]
        if quad <= 1e-300:
            ti = 1.0 if lin <= 0.0 else min(1.0, room / lin)
        else:
            disc = lin * lin + 4.0 * quad * room
            ti = min(1.0, (-lin + math.sqrt(max(disc, 0.0))) / (2.0 * quad))
        best = min(best, max(ti, 0.0))
    return best


def _check_approx_shape(inst: UqInstance):
    if any(bd.has_lower for bd in inst.bounds):
        raise WrongShape("approximation needs all lower bounds = -inf")
    if not all(bd.has_upper for bd in inst.bounds):
        raise WrongShape("approximation needs every upper bound finite")
    if abs(float(inst.d[0])) > 0.0:
        raise PreconditionViolated("approximation requires d_0 = 0; translate first")
    for i, bd in enumerate(inst.bounds):
        if inst.d[i + 1] >= bd.upper:
            raise PreconditionViolated(
                f"origin is not strictly interior: d_{i + 1} >= u_{i + 1}"
            )


def approx_uq(
    inst: UqInstance,
    tol: float = 1e-8,
    opts: SolveOptions | None = None,
) -> tuple[np.ndarray, ApproxTrace, ApproxCertificate]:
    """Feasible point with a certified fraction of the relaxation optimum.

    Solves the relaxation; when the cone is already tight the optimum itself
    is returned (ratio 1).  Otherwise a companion point y carrying the
    missing cone energy is folded with x* into two candidates s_1, s_2 of
    which at least one scales into the feasible region losing at most the
    certified factor.
    """
    _check_approx_shape(inst)
    gamma = gamma_uq(inst)
    ratio = ((1.0 - gamma) / (math.sqrt(2.0) + gamma)) ** 2
    prog, meta = reformulate.build_socp_uq(inst)
    res = solve(prog, opts)
    if res.status != "Optimal":
        raise PreconditionViolated(f"relaxation solve ended with {res.status}")
    value = meta.original_value(res)
    x_star = meta.x_of(res.z)
    t_star = float(res.z[inst.n])
    qd = inst.q.dense()
    xqx = float(x_star @ qd @ x_star)
    scale = 1.0 + abs(t_star)

    gap = t_star - xqx
    if gap > 1e-9 * scale and reformulate.check_as3(inst).holds:
        # exact instance: close the cone at the optimum and take the shortcut
        try:
            x_star, _ = tighten_uq(inst, res)
            xqx = float(x_star @ qd @ x_star)
            gap = t_star - xqx
        except (ConditionNotMet, TightenFailed):
            pass
    # a nonnegative cone gap only slackens one-sided rows, so x* is feasible
    # whenever the gap is small; its value is the optimum minus the gap
    f_star = xqx + 2.0 * float(inst.b[0] @ x_star)
    if gap <= 1e-6 * scale or value - f_star <= 1e-6 * (1.0 + abs(value)):
        trace = ApproxTrace(
            y=np.zeros(inst.n), alpha=0.0, s1=x_star.copy(), s2=np.zeros(inst.n),
            t1=1.0, t2=0.0, j_bar=1, x_bar=x_star.copy(), tau_bar=1.0,
            gamma=gamma, guaranteed_ratio=ratio, shortcut=True,
        )
        fx = model.eval_f(inst, 0, x_star)
        return x_star, trace, ApproxCertificate(fx, value, gamma, ratio)

    # companion point with the missing cone energy: x*'Qx* + y'Qy = t*
    w, v = linalg.sym_eig(inst.q)
    rho = math.sqrt(gap)
    y = rho * (v[:, 0] / math.sqrt(w[0]))
    assert abs(xqx + float(y @ qd @ y) - t_star) <= 1e-8 * scale

    # alpha > 0 with f_0(x* + alpha y) = value
    a2 = float(y @ qd @ y)
    a1 = 2.0 * float(x_star @ qd @ y) + 2.0 * float(inst.b[0] @ y)
    a0 = f_star - value
    disc = a1 * a1 - 4.0 * a2 * a0
    alpha = (-a1 + math.sqrt(max(disc, 0.0))) / (2.0 * a2)
    if alpha < 1e-10:
        alpha = max(alpha, 0.0)
    denom = math.sqrt(1.0 + alpha * alpha)
    s1 = (x_star + alpha * y) / denom
    s2 = (alpha * x_star - y) / denom
    t1 = 1.0 / denom
    t2 = alpha / denom
    assert abs(t1 * t1 + t2 * t2 - 1.0) <= 1e-12

    # split identity: the two cone-tight candidates share the optimum
    lhs = (
        float(s1 @ qd @ s1) + 2.0 * t1 * float(inst.b[0] @ s1)
        + float(s2 @ qd @ s2) + 2.0 * t2 * float(inst.b[0] @ s2)
    )
    assert abs(lhs - value) <= 1e-8 * (1.0 + abs(value))

    cho = scipy.linalg.cho_factor(qd)
    root = (v * np.sqrt(w)) @ v.T

    def selection_bound(s, tj):
        worst = 0.0
        for i, bd in enumerate(inst.bounds):
            bi = inst.b[i + 1]
            qb = scipy.linalg.cho_solve(cho, bi)
            num = np.linalg.norm(root @ (s / tj) + root @ qb)
            den = math.sqrt(bd.upper - inst.d[i + 1] + float(bi @ qb))
            worst = max(worst, num / den)
        return worst

    candidates = []
    if t1 > 1e-10:
        candidates.append((1, s1, t1, selection_bound(s1, t1)))
    if t2 > 1e-10:
        candidates.append((2, s2, t2, selection_bound(s2, t2)))
    limit = math.sqrt(2.0) * (1.0 + 1e-9) + 1e-12
    admissible = [c for c in candidates if c[3] <= limit]
    assert admissible, "no candidate satisfies the sqrt(2) selection bound"
    if len(admissible) == 2:
        admissible.sort(key=lambda c: -float(inst.b[0] @ (c[1] / c[2])))
    j_bar, s_j, t_j, _ = admissible[0]

    x_bar = s_j / t_j
    if float(inst.b[0] @ x_bar) < 0.0:
        x_bar = -x_bar
    tau = tau_bar(inst, x_bar)
    x_out = tau * x_bar
    fx = model.eval_f(inst, 0, x_out)
    cert = ApproxCertificate(fx, value, gamma, ratio)
    if fx < ratio * value - tol - 1e-5 * (1.0 + abs(value)):
        raise TightenFailed(
            f"certified ratio violated: f_0 = {fx:.6e} < {ratio:.4f} * {value:.6e}",
            None,
        )
    trace = ApproxTrace(
        y=y, alpha=alpha, s1=s1, s2=s2, t1=t1, t2=t2, j_bar=j_bar,
        x_bar=x_bar, tau_bar=tau, gamma=gamma, guaranteed_ratio=ratio,
    )
    return x_out, trace, cert
