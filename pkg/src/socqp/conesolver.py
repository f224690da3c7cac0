"""Linear + second-order cone programming solver.

Solves  min c'z  s.t.  E z = f,  G z <= h,  ||A_k z + b_k|| <= c_k'z + d_k
with a dense primal-dual path-following interior-point method: Nesterov-Todd
scaling over the product of the nonnegative orthant and second-order cones,
Mehrotra predictor-corrector steps, and KKT solves by symmetric indefinite
factorization with static regularization plus iterative refinement.

Also evaluates the closed-form Lagrangian dual of a uniform quadratic
instance and certifies strong duality of a relaxation solve against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import model
from .errors import InvalidMultiplier, InvalidProgram, NotPositiveDefinite


@dataclass
class SocBlock:
    """One second-order cone constraint ||a z + b|| <= c'z + d."""

    a: np.ndarray  # (k, N)
    b: np.ndarray  # (k,)
    c: np.ndarray  # (N,)
    d: float

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.d = float(self.d)

    @property
    def dim(self) -> int:
        return self.b.size + 1


@dataclass
class ConeProgram:
    """Minimize c'z subject to linear rows, equalities and SOC blocks.

    ``offset`` is a constant added to the reported objective so builders can
    carry dropped constants (for example a negated d_0) through the solve.
    """

    c: np.ndarray
    g: np.ndarray | None = None
    h: np.ndarray | None = None
    e: np.ndarray | None = None
    f: np.ndarray | None = None
    soc: list[SocBlock] = field(default_factory=list)
    offset: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        nv = self.c.size
        if nv < 1:
            raise InvalidProgram("a cone program needs at least one variable")
        self.g = (
            np.zeros((0, nv)) if self.g is None else np.atleast_2d(np.asarray(self.g, dtype=float))
        )
        self.h = np.zeros(0) if self.h is None else np.asarray(self.h, dtype=float).reshape(-1)
        self.e = (
            np.zeros((0, nv)) if self.e is None else np.atleast_2d(np.asarray(self.e, dtype=float))
        )
        self.f = np.zeros(0) if self.f is None else np.asarray(self.f, dtype=float).reshape(-1)
        if self.g.shape != (self.h.size, nv):
            raise InvalidProgram(f"G must be (len(h), {nv}), got {self.g.shape}")
        if self.e.shape != (self.f.size, nv):
            raise InvalidProgram(f"E must be (len(f), {nv}), got {self.e.shape}")
        for k, blk in enumerate(self.soc):
            if blk.a.shape != (blk.b.size, nv) or blk.c.size != nv:
                raise InvalidProgram(f"SOC block {k} has inconsistent dimensions")
        data = [self.c, self.g, self.h, self.e, self.f]
        data += [x for blk in self.soc for x in (blk.a, blk.b, blk.c, [blk.d])]
        if not all(np.all(np.isfinite(np.asarray(x, dtype=float))) for x in data):
            raise InvalidProgram("program data must be finite")

    @property
    def nvar(self) -> int:
        return self.c.size

    def value(self, z) -> float:
        return float(self.c @ np.asarray(z, dtype=float)) + self.offset

    def violation(self, z) -> float:
        """Worst constraint violation at z (0 when feasible)."""
        z = np.asarray(z, dtype=float)
        worst = 0.0
        if self.h.size:
            worst = max(worst, float(np.max(self.g @ z - self.h, initial=0.0)))
        if self.f.size:
            worst = max(worst, float(np.abs(self.e @ z - self.f).max(initial=0.0)))
        for blk in self.soc:
            lhs = float(np.linalg.norm(blk.a @ z + blk.b))
            worst = max(worst, lhs - (float(blk.c @ z) + blk.d))
        return worst


@dataclass
class SolveOptions:
    feastol: float = 1e-8
    gaptol: float = 1e-8
    max_iter: int = 200
    step_scale: float = 0.99
    static_reg: float = 1e-10
    refine_steps: int = 2
    unbounded_objective: float = 1e12


@dataclass
class SolverResult:
    """Solution, duals and accuracy report for one cone-program solve."""

    status: str  # Optimal | Infeasible | Unbounded | MaxIter
    z: np.ndarray
    objective: float  # c'z + offset (minimization sense)
    y: np.ndarray  # equality multipliers
    lam_lin: np.ndarray  # multipliers of the linear rows, >= 0
    lam_soc: list[np.ndarray]  # dual cone vector per SOC block
    s_lin: np.ndarray
    s_soc: list[np.ndarray]
    pres: float
    dres: float
    gap: float
    relgap: float
    iterations: int
    certificate: np.ndarray | None = None
    certificate_kind: str | None = None


@dataclass(frozen=True)
class DualPoint:
    """Signed multipliers of the two-sided rows: lam_i = lam_i^+ - lam_i^-."""

    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float).reshape(-1))
        if not np.all(np.isfinite(self.lam)):
            raise InvalidMultiplier("multipliers must be finite")


# ---------------------------------------------------------------------------
# cone utilities: vectors live in R^l x Q_{d_1} x ... x Q_{d_q}
# ---------------------------------------------------------------------------


def _blocks(vec, l, dims):
    out = []
    at = l
    for d in dims:
        out.append(vec[at : at + d])
        at += d
    return out


def _cone_identity(l, dims):
    e = np.zeros(l + sum(dims))
    e[:l] = 1.0
    at = l
    for d in dims:
        e[at] = 1.0
        at += d
    return e


def _cone_min_margin(u, l, dims):
    """min over parts of the distance-to-boundary (negative when outside)."""
    margins = []
    if l:
        margins.append(float(np.min(u[:l])))
    for blk in _blocks(u, l, dims):
        margins.append(float(blk[0] - np.linalg.norm(blk[1:])))
    return min(margins) if margins else math.inf


def _jprod(u, w, l, dims):
    out = np.empty_like(u)
    out[:l] = u[:l] * w[:l]
    at = l
    for d in dims:
        ub, wb = u[at : at + d], w[at : at + d]
        out[at] = ub @ wb
        out[at + 1 : at + d] = ub[0] * wb[1:] + wb[0] * ub[1:]
        at += d
    return out


def _jsolve(u, b, l, dims):
    """Solve u o x = b in the Jordan algebra of the product cone."""
    out = np.empty_like(b)
    out[:l] = b[:l] / u[:l]
    at = l
    for d in dims:
        ub, bb = u[at : at + d], b[at : at + d]
        det = ub[0] ** 2 - ub[1:] @ ub[1:]
        x0 = (ub[0] * bb[0] - ub[1:] @ bb[1:]) / det
        out[at] = x0
        out[at + 1 : at + d] = (bb[1:] - x0 * ub[1:]) / ub[0]
        at += d
    return out


def _soc_max_step(u, du):
    """Largest step keeping u + alpha*du inside one second-order cone."""
    a2 = du[0] ** 2 - du[1:] @ du[1:]
    a1 = u[0] * du[0] - u[1:] @ du[1:]
    nrm = np.linalg.norm(u[1:])
    a0 = (u[0] - nrm) * (u[0] + nrm)  # factored to dodge cancellation
    cands = []
    if abs(a2) < 1e-300:
        if a1 < 0.0:
            cands.append(-a0 / (2.0 * a1))
    else:
        disc = a1 * a1 - a2 * a0
        if disc >= 0.0:
            rt = math.sqrt(disc)
            for r in ((-a1 - rt) / a2, (-a1 + rt) / a2):
                if r > 0.0:
                    cands.append(r)
    if du[0] < 0.0:
        cands.append(-u[0] / du[0])
    return min(cands) if cands else math.inf


def _max_step(u, du, l, dims):
    alpha = math.inf
    if l:
        neg = du[:l] < 0.0
        if np.any(neg):
            alpha = float(np.min(-u[:l][neg] / du[:l][neg]))
    at = l
    for d in dims:
        alpha = min(alpha, _soc_max_step(u[at : at + d], du[at : at + d]))
        at += d
    return alpha


class _ScalingBreakdown(ArithmeticError):
    """An iterate touched the cone boundary to machine precision."""


def _jnorm(u):
    # u0^2 - ||u1||^2 in factored form to dodge cancellation near the boundary
    nrm = np.linalg.norm(u[1:])
    val = (u[0] - nrm) * (u[0] + nrm)
    if val <= 0.0 or u[0] <= 0.0:
        raise _ScalingBreakdown
    return math.sqrt(val)


class _Scaling:
    """Nesterov-Todd scaling W of the product cone: W lam = W^{-1} s."""

    def __init__(self, s, lam, l, dims):
        self.l = l
        self.dims = dims
        if l and (np.any(s[:l] <= 0.0) or np.any(lam[:l] <= 0.0)):
            raise _ScalingBreakdown
        self.wl = np.sqrt(s[:l] / lam[:l]) if l else np.zeros(0)
        self.soc_w = []
        self.soc_winv = []
        self.soc_w2 = []
        at = l
        for d in dims:
            sb, lb = s[at : at + d], lam[at : at + d]
            sj = _jnorm(sb)
            lj = _jnorm(lb)
            s_, l_ = sb / sj, lb / lj
            gamma = math.sqrt((1.0 + s_ @ l_) / 2.0)
            wbar = s_.copy()
            wbar[0] += l_[0]
            wbar[1:] -= l_[1:]
            wbar /= 2.0 * gamma
            eta = sj / lj
            sq = math.sqrt(eta)
            outer = np.outer(wbar[1:], wbar[1:]) / (1.0 + wbar[0])
            w = np.empty((d, d))
            w[0, 0] = wbar[0]
            w[0, 1:] = wbar[1:]
            w[1:, 0] = wbar[1:]
            w[1:, 1:] = np.eye(d - 1) + outer
            winv = w.copy()
            winv[0, 1:] *= -1.0
            winv[1:, 0] *= -1.0
            jmat = np.diag(np.r_[1.0, -np.ones(d - 1)])
            w2 = eta * (2.0 * np.outer(wbar, wbar) - jmat)
            self.soc_w.append(sq * w)
            self.soc_winv.append(winv / sq)
            self.soc_w2.append(w2)
            at += d

    def apply(self, u):
        out = np.empty_like(u)
        out[: self.l] = self.wl * u[: self.l]
        at = self.l
        for w, d in zip(self.soc_w, self.dims):
            out[at : at + d] = w @ u[at : at + d]
            at += d
        return out

    def apply_inv(self, u):
        out = np.empty_like(u)
        out[: self.l] = u[: self.l] / self.wl
        at = self.l
        for winv, d in zip(self.soc_winv, self.dims):
            out[at : at + d] = winv @ u[at : at + d]
            at += d
        return out

    def w2_matrix(self):
        m = self.l + sum(self.dims)
        w2 = np.zeros((m, m))
        if self.l:
            w2[: self.l, : self.l] = np.diag(self.wl**2)
        at = self.l
        for blk, d in zip(self.soc_w2, self.dims):
            w2[at : at + d, at : at + d] = blk
            at += d
        return w2


class _Kkt:
    """Symmetric indefinite KKT solver with static regularization."""

    def __init__(self, nv, ne, gc, ec, w2, reg, refine_steps):
        m = gc.shape[0]
        dim = nv + ne + m
        k = np.zeros((dim, dim))
        k[:nv, nv : nv + ne] = ec.T
        k[nv : nv + ne, :nv] = ec
        k[:nv, nv + ne :] = gc.T
        k[nv + ne :, :nv] = gc
        k[nv + ne :, nv + ne :] = -w2
        self.k = k
        self.refine_steps = refine_steps
        kreg = k.copy()
        idx = np.arange(dim)
        kreg[idx[:nv], idx[:nv]] += reg
        kreg[idx[nv:], idx[nv:]] -= reg
        ldu, ipiv, info = lapack.dsytrf(kreg, lower=1)
        bump = reg
        while info != 0 and bump < 1.0:
            bump *= 100.0
            kreg = k.copy()
            kreg[idx[:nv], idx[:nv]] += bump
            kreg[idx[nv:], idx[nv:]] -= bump
            ldu, ipiv, info = lapack.dsytrf(kreg, lower=1)
        if info != 0:
            raise InvalidProgram("KKT matrix is numerically singular")
        self.ldu = ldu
        self.ipiv = ipiv

    def solve(self, rhs):
        x, info = lapack.dsytrs(self.ldu, self.ipiv, rhs, lower=1)
        if info != 0:
            raise InvalidProgram("KKT solve failed")
        for _ in range(self.refine_steps):
            r = rhs - self.k @ x
            dx, info = lapack.dsytrs(self.ldu, self.ipiv, r, lower=1)
            if info != 0:
                break
            x = x + dx
        return x


def _conic_rows(prog: ConeProgram):
    """Stack linear rows and SOC blocks into G_c z + s = h_c with s in K."""
    parts_g = [prog.g]
    parts_h = [prog.h]
    dims = []
    for blk in prog.soc:
        parts_g.append(-blk.c[None, :])
        parts_g.append(-blk.a)
        parts_h.append(np.array([blk.d]))
        parts_h.append(blk.b)
        dims.append(blk.dim)
    return np.vstack(parts_g), np.concatenate(parts_h), prog.h.size, dims


def _initial_point(nv, ne, gc, hc, ec, fc, cvec, l, dims, opts):
    m = gc.shape[0]
    ident = _Scaling(_cone_identity(l, dims), _cone_identity(l, dims), l, dims)
    kkt = _Kkt(nv, ne, gc, ec, ident.w2_matrix(), opts.static_reg, opts.refine_steps)
    sol = kkt.solve(np.concatenate([np.zeros(nv), fc, hc]))
    z = sol[:nv]
    s = hc - gc @ z
    margin = _cone_min_margin(s, l, dims)
    if margin <= 0.0:
        s = s + (1.0 - margin) * _cone_identity(l, dims)
    sol = kkt.solve(np.concatenate([-cvec, np.zeros(ne), np.zeros(m)]))
    y = sol[nv : nv + ne]
    lam = sol[nv + ne :].copy()
    margin = _cone_min_margin(lam, l, dims)
    if margin <= 0.0:
        lam = lam + (1.0 - margin) * _cone_identity(l, dims)
    return z, y, s, lam


def _split_duals(lam, s, l, dims):
    lam_lin = lam[:l].copy()
    s_lin = s[:l].copy()
    lam_soc = [b.copy() for b in _blocks(lam, l, dims)]
    s_soc = [b.copy() for b in _blocks(s, l, dims)]
    return lam_lin, lam_soc, s_lin, s_soc


def solve(prog: ConeProgram, opts: SolveOptions | None = None) -> SolverResult:
    """Solve a cone program; deterministic for fixed inputs and options."""
    opts = opts or SolveOptions()
    nv = prog.nvar
    gc, hc, l, dims = _conic_rows(prog)
    ec, fc, cvec = prog.e, prog.f, prog.c
    ne = ec.shape[0]
    m = gc.shape[0]
    if m == 0:
        return _solve_equality_only(prog, opts)
    nu = l + len(dims)

    c_scale = 1.0 + float(np.abs(cvec).max(initial=0.0))
    h_scale = 1.0 + max(
        float(np.abs(hc).max(initial=0.0)), float(np.abs(fc).max(initial=0.0))
    )

    z, y, s, lam = _initial_point(nv, ne, gc, hc, ec, fc, cvec, l, dims, opts)
    e_cone = _cone_identity(l, dims)
    best = None
    stall = 0

    for it in range(opts.max_iter + 1):
        res_x = cvec + gc.T @ lam + ec.T @ y
        res_y = ec @ z - fc
        res_z = gc @ z + s - hc
        pobj = float(cvec @ z)
        dobj = float(-hc @ lam - fc @ y)
        gap = float(s @ lam)
        relgap = gap / (1.0 + abs(pobj))
        pres = max(
            float(np.abs(res_y).max(initial=0.0)),
            float(np.abs(res_z).max(initial=0.0)),
        ) / h_scale
        dres = float(np.abs(res_x).max(initial=0.0)) / c_scale

        state = (pres, dres, gap, relgap, pobj, dobj, z.copy(), y.copy(), s.copy(), lam.copy(), it)
        if best is None or max(pres, dres) + relgap < max(best[0], best[1]) + best[3]:
            best = state

        if pres <= opts.feastol and dres <= opts.feastol and relgap <= opts.gaptol:
            lam_lin, lam_soc, s_lin, s_soc = _split_duals(lam, s, l, dims)
            return SolverResult(
                "Optimal", z.copy(), pobj + prog.offset, y.copy(), lam_lin, lam_soc,
                s_lin, s_soc, pres, dres, gap, relgap, it,
            )

        # Farkas-type primal infeasibility certificate: lam in K*, G'lam+E'y=0,
        # h'lam + f'y < 0.
        theta = -(hc @ lam + fc @ y)
        if theta > 0.0:
            fk = (gc.T @ lam + ec.T @ y) / theta
            if float(np.abs(fk).max(initial=0.0)) / c_scale <= opts.feastol:
                lam_lin, lam_soc, s_lin, s_soc = _split_duals(lam / theta, s, l, dims)
                return SolverResult(
                    "Infeasible", np.full(nv, np.nan), math.nan, y / theta, lam_lin,
                    lam_soc, s_lin, s_soc, pres, dres, gap, relgap, it,
                    certificate=np.concatenate([y / theta, lam / theta]),
                    certificate_kind="farkas_dual",
                )

        # Improving-ray certificate: E zh = 0, -G zh in K, c'zh = -1.
        if pobj < 0.0:
            zh = z / (-pobj)
            ray_res = max(
                float(np.abs(ec @ zh).max(initial=0.0)),
                max(0.0, -_cone_min_margin(-gc @ zh, l, dims)),
            ) / h_scale
            if ray_res <= opts.feastol:
                return SolverResult(
                    "Unbounded", z.copy(), pobj + prog.offset, y.copy(),
                    *_split_duals(lam, s, l, dims), pres, dres, gap, relgap, it,
                    certificate=zh, certificate_kind="improving_ray",
                )
        if pobj <= -opts.unbounded_objective and pres <= opts.feastol:
            return SolverResult(
                "Unbounded", z.copy(), pobj + prog.offset, y.copy(),
                *_split_duals(lam, s, l, dims), pres, dres, gap, relgap, it,
                certificate=z / max(1.0, float(np.linalg.norm(z))),
                certificate_kind="improving_ray",
            )

        if it == opts.max_iter or stall >= 3:
            break

        mu = gap / nu
        try:
            scaling = _Scaling(s, lam, l, dims)
        except _ScalingBreakdown:
            break  # boundary reached at machine precision; keep best iterate
        v = scaling.apply(lam)
        kkt = _Kkt(nv, ne, gc, ec, scaling.w2_matrix(), opts.static_reg, opts.refine_steps)

        # predictor (affine) direction: target complementarity 0
        ds_aff = -v
        rhs = np.concatenate([-res_x, -res_y, -res_z - scaling.apply(ds_aff)])
        sol = kkt.solve(rhs)
        dz_a, dy_a = sol[:nv], sol[nv : nv + ne]
        dlam_a = sol[nv + ne :]
        ds_a = scaling.apply(ds_aff) - scaling.w2_matrix() @ dlam_a

        alpha_a = min(
            1.0, _max_step(s, ds_a, l, dims), _max_step(lam, dlam_a, l, dims)
        )
        gap_a = float((s + alpha_a * ds_a) @ (lam + alpha_a * dlam_a))
        sigma = min(1.0, max(0.0, gap_a / gap)) ** 3

        # corrector: target sigma*mu*e minus the Mehrotra second-order term
        corr = _jprod(scaling.apply_inv(ds_a), scaling.apply(dlam_a), l, dims)
        ds_comb = -v + _jsolve(v, sigma * mu * e_cone - corr, l, dims)
        rhs = np.concatenate([-res_x, -res_y, -res_z - scaling.apply(ds_comb)])
        sol = kkt.solve(rhs)
        dz, dy = sol[:nv], sol[nv : nv + ne]
        dlam = sol[nv + ne :]
        ds = scaling.apply(ds_comb) - scaling.w2_matrix() @ dlam

        alpha = min(
            1.0,
            opts.step_scale * _max_step(s, ds, l, dims),
            opts.step_scale * _max_step(lam, dlam, l, dims),
        )
        # the boundary step from the quadratic can be slightly optimistic in
        # degenerate geometry; verify strict interiority and back off if needed
        for _ in range(60):
            if (
                _cone_min_margin(s + alpha * ds, l, dims) > 0.0
                and _cone_min_margin(lam + alpha * dlam, l, dims) > 0.0
            ):
                break
            alpha *= 0.9
        else:
            break  # cannot stay interior at machine precision
        stall = stall + 1 if alpha < 1e-13 else 0
        z = z + alpha * dz
        y = y + alpha * dy
        s = s + alpha * ds
        lam = lam + alpha * dlam

    pres, dres, gap, relgap, pobj, dobj, z, y, s, lam, it = best
    lam_lin, lam_soc, s_lin, s_soc = _split_duals(lam, s, l, dims)
    return SolverResult(
        "MaxIter", z, pobj + prog.offset, y, lam_lin, lam_soc, s_lin, s_soc,
        pres, dres, gap, relgap, it,
    )


def _solve_equality_only(prog: ConeProgram, opts: SolveOptions) -> SolverResult:
    """Corner case: no cone rows at all."""
    ec, fc, cvec = prog.e, prog.f, prog.c
    z, *_ = scipy.linalg.lstsq(ec, fc)
    empty = np.zeros(0)
    if float(np.abs(ec @ z - fc).max(initial=0.0)) > opts.feastol * (
        1.0 + float(np.abs(fc).max(initial=0.0))
    ):
        return SolverResult(
            "Infeasible", np.full(prog.nvar, np.nan), math.nan, empty.copy(),
            empty.copy(), [], empty.copy(), [], math.inf, 0.0, 0.0, 0.0, 0,
        )
    # objective varies over the feasible affine set iff c has a component in
    # the null space of E
    y, *_ = scipy.linalg.lstsq(ec.T, -cvec)
    reduced = cvec + ec.T @ y
    if float(np.abs(reduced).max(initial=0.0)) > opts.feastol * (
        1.0 + float(np.abs(cvec).max(initial=0.0))
    ):
        ray = -reduced / np.linalg.norm(reduced)
        return SolverResult(
            "Unbounded", z, -math.inf, y, empty.copy(), [], empty.copy(), [],
            0.0, math.inf, 0.0, 0.0, 0, certificate=ray,
            certificate_kind="improving_ray",
        )
    return SolverResult(
        "Optimal", z, float(cvec @ z) + prog.offset, y, empty.copy(), [],
        empty.copy(), [], 0.0, 0.0, 0.0, 0.0, 0,
    )


# ---------------------------------------------------------------------------
# closed-form Lagrangian dual of a uniform quadratic instance
# ---------------------------------------------------------------------------


def dual_value(
    inst: model.UqInstance,
    point: DualPoint,
    zero_tol: float = 1e-9,
) -> float:
    """Evaluate the dual function d(lam) of a positive definite instance.

    With sigma = 1 - sum(lam), beta = b_0 - sum(lam_i b_i) and the constant
    kappa = -sum(lam_i d_i) + sum(lam_i^+ u_i - lam_i^- l_i) + d_0:
    d(lam) = kappa - beta' Q^{-1} beta / sigma  when sigma < 0,
    kappa when sigma = 0 and beta = 0, and +inf otherwise (the inner sup
    over x is unbounded).
    """
    lam = point.lam
    if lam.size != inst.p:
        raise InvalidMultiplier(f"expected {inst.p} multipliers, got {lam.size}")
    try:
        cho = scipy.linalg.cho_factor(inst.q.dense())
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("dual evaluation requires Q positive definite") from exc

    kappa = float(inst.d[0])
    for i, bd in enumerate(inst.bounds):
        li = lam[i]
        lp, lm = max(li, 0.0), max(-li, 0.0)
        if lp > 0.0 and not bd.has_upper:
            raise InvalidMultiplier(f"lam_{i + 1}^+ > 0 but u_{i + 1} = +inf")
        if lm > 0.0 and not bd.has_lower:
            raise InvalidMultiplier(f"lam_{i + 1}^- > 0 but l_{i + 1} = -inf")
        kappa += -li * float(inst.d[i + 1])
        if lp > 0.0:
            kappa += lp * bd.upper
        if lm > 0.0:
            kappa -= lm * bd.lower
    sigma = 1.0 - float(lam.sum())
    beta = inst.b[0] - lam @ inst.b[1:]
    sig_scale = 1.0 + float(np.abs(lam).sum())
    beta_scale = 1.0 + float(np.abs(inst.b).max())
    if sigma < 0.0:
        return kappa - float(beta @ scipy.linalg.cho_solve(cho, beta)) / sigma
    if sigma <= zero_tol * sig_scale and np.linalg.norm(beta) <= math.sqrt(zero_tol) * beta_scale:
        return kappa
    return math.inf


@dataclass(frozen=True)
class StrongDualityReport:
    holds: bool
    gap: float
    relaxation_value: float
    dual_value: float
    point: DualPoint


def recover_multipliers(inst: model.UqInstance, res: SolverResult) -> DualPoint:
    """Signed constraint multipliers from a relaxation solve of ``inst``.

    Assumes the standard row layout of the uniform-instance relaxation
    builder: for each constraint, the finite upper row precedes the finite
    lower row.  lam_i is the upper-row multiplier minus the lower-row one.
    """
    lam = np.zeros(inst.p)
    at = 0
    for i, bd in enumerate(inst.bounds):
        if bd.has_upper:
            lam[i] += res.lam_lin[at]
            at += 1
        if bd.has_lower:
            lam[i] -= res.lam_lin[at]
            at += 1
    if at != res.lam_lin.size:
        raise InvalidMultiplier(
            "solver result does not match this instance's relaxation layout"
        )
    return DualPoint(lam)


def certify_strong_duality(
    inst: model.UqInstance,
    res: SolverResult,
    rel_tol: float = 1e-5,
) -> StrongDualityReport:
    """Compare the closed-form dual value at the solve's multipliers with the
    relaxation optimum; the certificate holds when they agree to rel_tol."""
    if res.status != "Optimal":
        raise InvalidMultiplier(f"certificate needs an Optimal solve, got {res.status}")
    point = recover_multipliers(inst, res)
    value = -res.objective  # relaxation builders negate the max objective
    dval = dual_value(inst, point)
    gap = dval - value
    holds = bool(abs(gap) <= rel_tol * (1.0 + abs(value)))
    return StrongDualityReport(holds, gap, value, dval, point)
