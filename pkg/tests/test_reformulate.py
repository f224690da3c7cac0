import math

import numpy as np
import pytest

from socqp import conesolver, linalg, model, reformulate
from socqp.errors import InvalidBounds, WrongShape
from socqp.linalg import SymMatrix
from socqp.model import Bound, QcqpInstance, UqInstance

from helpers import grid_opt, random_pd_matrix, random_uq, trs_secular


def solve_value(prog, meta):
    res = conesolver.solve(prog)
    assert res.status == "Optimal", res.status
    return meta.original_value(res), res


# ---------------------------------------------------------------------------
# uniform relaxation
# ---------------------------------------------------------------------------


def test_build_socp_uq_single_ball():
    inst = UqInstance(
        2,
        SymMatrix.identity(2),
        np.zeros((2, 2)),
        np.zeros(2),
        [Bound(-math.inf, 1.0)],
    )
    prog, meta = reformulate.build_socp_uq(inst)
    value, res = solve_value(prog, meta)
    assert value == pytest.approx(1.0, abs=1e-7)
    assert res.z[meta.t_index[0]] == pytest.approx(1.0, abs=1e-6)


def test_build_socp_uq_rejects_indefinite():
    inst = UqInstance(
        2,
        SymMatrix.from_dense(np.diag([1.0, -1.0])),
        np.zeros((2, 2)),
        np.zeros(2),
        [Bound(-math.inf, 1.0)],
    )
    with pytest.raises(WrongShape):
        reformulate.build_socp_uq(inst)


def test_relaxation_soundness_uq():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(2, 4))
        inst = random_uq(rng, n, int(rng.integers(1, 4)), two_sided_prob=0.3)
        prog, meta = reformulate.build_socp_uq(inst)
        x = rng.normal(size=n) * 0.3
        if not model.is_feasible(inst, x, tol=0.0):
            continue
        z = np.concatenate([x, [inst.q.quad(x)]])
        assert prog.violation(z) <= 1e-9
        assert -prog.value(z) == pytest.approx(model.eval_f(inst, 0, x), abs=1e-9)
        assert np.array_equal(meta.x_of(z), x)


def test_check_as3_examples():
    gap1d = UqInstance(
        1,
        SymMatrix.identity(1),
        np.array([[0.0], [1.0], [-1.0]]),
        np.zeros(3),
        [Bound(1.0, 3.0), Bound(-1.0, 3.0)],
    )
    assert not reformulate.check_as3(gap1d).holds
    rng = np.random.default_rng(1)
    full = random_uq(rng, 3, 3)
    assert reformulate.check_as3(full).holds  # p = n clause
    over = random_uq(rng, 4, 5, b_scale=1.0)
    cert = reformulate.check_as3(over)
    assert cert.holds == (cert.rank <= 3)
    assert cert.rank == np.linalg.matrix_rank(over.b[1:], tol=1e-8)


# ---------------------------------------------------------------------------
# lifted sets and union conditions
# ---------------------------------------------------------------------------


def two_block_instance(signs, bounds=None, n=3, seed=0):
    rng = np.random.default_rng(seed)
    blocks = [random_pd_matrix(rng, n), SymMatrix.identity(n)]
    signs = np.asarray(signs, dtype=float)
    p = signs.shape[0] - 1
    b = rng.normal(size=(p + 1, n)) * 0.2
    c = np.zeros(p + 1)
    bounds = bounds or [Bound(-math.inf, 1.0)] * p
    return QcqpInstance(n, blocks, signs, b, c, bounds, sense="min")


def test_lift_sets_match_bruteforce_scan():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m = int(rng.integers(1, 4))
        p = int(rng.integers(1, 4))
        signs = rng.integers(-1, 2, size=(p + 1, m)).astype(float)
        # scan directly on the sign matrix, independent of the library
        j_expect = {j for j in range(m) if any(signs[i, j] == -1 for i in range(p + 1))}
        k_expect = {
            j
            for j in range(m)
            if signs[0, j] == -1 or any(signs[i, j] != 0 for i in range(1, p + 1))
        }
        blocks = [SymMatrix.identity(2) for _ in range(m)]
        qi = QcqpInstance(
            2,
            blocks,
            signs,
            np.zeros((p + 1, 2)),
            np.zeros(p + 1),
            [Bound(-math.inf, 1.0)] * p,
        )
        assert set(reformulate.lift_set_onesided(qi)) == j_expect
        assert set(reformulate.lift_set_twosided(qi)) == k_expect


def test_condition_c_trs_shape_always_holds():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3))
    a = a + a.T - 4.0 * np.eye(3)  # definitely not PSD
    inst = reformulate.build_trs(SymMatrix.from_dense(a), rng.normal(size=3))
    j = reformulate.lift_set_onesided(inst)
    assert reformulate.check_condition_c(inst, j).holds


def test_condition_c_fails_when_span_fills():
    # single identity block (trivial null space) with spanning linear terms
    n = 2
    inst = QcqpInstance(
        n,
        [SymMatrix.identity(n)],
        np.array([[-1.0], [1.0], [1.0]]),
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.zeros(3),
        [Bound(-math.inf, 1.0)] * 2,
        sense="min",
    )
    cert = reformulate.check_condition_c(inst, reformulate.lift_set_onesided(inst))
    assert not cert.holds
    assert cert.dims[0] == n


def test_condition_dims_match_stacked_rank():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = 4
        b1 = rng.normal(size=(n, 2))
        q1 = SymMatrix.from_dense(b1 @ b1.T)
        q2 = random_pd_matrix(rng, n)
        signs = np.array([[1.0, -1.0], [0.0, 1.0]])
        inst = QcqpInstance(
            n,
            [q1, q2],
            signs,
            rng.normal(size=(2, n)),
            np.zeros(2),
            [Bound(-math.inf, 1.0)],
            sense="min",
        )
        k = reformulate.lift_set_twosided(inst)
        cert = reformulate.check_condition_cc(inst, k)
        for j in k:
            cols = [inst.b[1]]
            cols += list(linalg.null_basis(inst.blocks[j]).columns.T)
            for i in range(inst.m):
                if i != j:
                    cols += list(linalg.range_basis(inst.blocks[i]).columns.T)
            assert cert.dims[j] == np.linalg.matrix_rank(
                np.column_stack(cols), tol=1e-8
            )


def test_condition_invariant_under_rotation():
    rng = np.random.default_rng(5)
    n = 3
    base = two_block_instance(np.array([[1.0, -1.0], [0.0, 1.0]]), n=n, seed=7)
    j = reformulate.lift_set_onesided(base)
    cert0 = reformulate.check_condition_c(base, j)
    u, _ = np.linalg.qr(rng.normal(size=(n, n)))
    rotated = QcqpInstance(
        n,
        [SymMatrix.from_dense(u @ blk.dense() @ u.T) for blk in base.blocks],
        base.a,
        base.b @ u.T,
        base.c,
        list(base.bounds),
        sense="min",
    )
    cert1 = reformulate.check_condition_c(rotated, j)
    assert cert0.holds == cert1.holds
    assert cert0.dims == cert1.dims


# ---------------------------------------------------------------------------
# one- and two-sided relaxation builders
# ---------------------------------------------------------------------------


def test_build_cr_rejects_two_sided_and_max():
    inst = two_block_instance(
        np.array([[1.0, 0.0], [0.0, 1.0]]), bounds=[Bound(0.0, 1.0)]
    )
    with pytest.raises(WrongShape):
        reformulate.build_cr(inst)


def test_build_cr_convex_passthrough():
    # no -1 sign anywhere: nothing lifted, program solves the original
    rng = np.random.default_rng(6)
    inst = two_block_instance(np.array([[1.0, 0.0], [0.0, 1.0]]), seed=8)
    prog, meta = reformulate.build_cr(inst)
    assert meta.lifted == ()
    value, res = solve_value(prog, meta)
    x = meta.x_of(res.z)
    assert inst.eval_g(0, x) == pytest.approx(value, abs=1e-6)
    val_grid, _ = grid_opt(
        lambda pts: np.array([inst.eval_g(0, q) for q in pts]),
        lambda pts: np.array([inst.is_feasible(q, 1e-9) for q in pts]),
        (np.full(3, -1.5), np.full(3, 1.5)),
        h=0.05,
        sense="min",
    )
    assert value <= val_grid + 1e-6


def test_build_cr_soundness_lifted_points():
    rng = np.random.default_rng(7)
    inst = two_block_instance(np.array([[1.0, -1.0], [0.0, 1.0]]), seed=9)
    prog, meta = reformulate.build_cr(inst)
    for _ in range(20):
        x = rng.normal(size=3) * 0.4
        if not inst.is_feasible(x, tol=0.0):
            continue
        z = np.zeros(prog.nvar)
        z[:3] = x
        for j in meta.lifted:
            z[meta.t_index[j]] = inst.blocks[j].quad(x)
        if meta.epi_index is not None:
            acc = sum(
                inst.blocks[j].quad(x)
                for j in range(inst.m)
                if j not in meta.lifted and inst.a[0, j] == 1.0
            )
            z[meta.epi_index] = acc
        assert prog.violation(z) <= 1e-9
        assert prog.value(z) == pytest.approx(inst.eval_g(0, x), abs=1e-9)


def test_build_trs_examples():
    # A = -I: optimum -1 with the lifted variable at the ball bound
    inst = reformulate.build_trs(SymMatrix.from_dense(-np.eye(2)), np.zeros(2))
    prog, meta = reformulate.build_cr(inst)
    value, res = solve_value(prog, meta)
    assert value == pytest.approx(-1.0, abs=1e-7)
    # A PSD passes through convex
    psd = reformulate.build_trs(SymMatrix.from_dense(np.eye(2)), np.array([1.0, 0.0]))
    assert reformulate.lift_set_onesided(psd) == ()


def test_build_trs_matches_secular_oracle():
    rng = np.random.default_rng(8)
    for trial in range(12):
        n = int(rng.integers(2, 6))
        a = rng.normal(size=(n, n))
        a = 0.5 * (a + a.T)
        b = rng.normal(size=n) * rng.choice([0.0, 0.2, 1.0])
        inst = reformulate.build_trs(SymMatrix.from_dense(a), b)
        prog, meta = reformulate.build_cr(inst)
        value, _ = solve_value(prog, meta)
        expect, _ = trs_secular(a, b)
        assert value == pytest.approx(expect, abs=1e-6), trial


def test_build_cr_flags_unbounded_relaxation():
    # lone lifted block with no upper limit on t: relaxation unbounded below
    n = 2
    inst = QcqpInstance(
        n,
        [SymMatrix.identity(n)],
        np.array([[-1.0], [0.0]]),
        np.zeros((2, n)),
        np.zeros(2),
        [Bound(-math.inf, math.inf)],
        sense="min",
    )
    prog, _ = reformulate.build_cr(inst)
    assert conesolver.solve(prog).status == "Unbounded"


def test_build_etrs_reduces_to_trs():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(3, 3))
    a = 0.5 * (a + a.T) - 2.0 * np.eye(3)
    b = rng.normal(size=3)
    trs = reformulate.build_trs(SymMatrix.from_dense(a), b)
    etr, report, shift = reformulate.build_etrs(
        SymMatrix.from_dense(a), 2.0 * b, np.zeros(3), 1.0
    )
    assert np.allclose(shift, 0.0)
    assert report.holds
    v1, _ = solve_value(*reformulate.build_cr(trs))
    v2, _ = solve_value(*reformulate.build_cr(etr))
    assert v1 == pytest.approx(v2, abs=1e-7)


def test_build_etrs_condition_cases():
    # range of the shifted Hessian has dim 2; one in-range row keeps it
    a = np.diag([-1.0, -1.0, 2.0])
    row_in = (np.array([0.0, 0.0, 1.0]), 0.5)
    _, rep, _ = reformulate.build_etrs(
        SymMatrix.from_dense(a), np.zeros(3), np.zeros(3), 1.0, [row_in]
    )
    assert rep.holds
    # two independent rows in R^2 exhaust the space
    a2 = np.diag([-1.0, 1.0])
    rows = [(np.array([1.0, 0.0]), 1.0), (np.array([0.0, 1.0]), 1.0)]
    _, rep2, _ = reformulate.build_etrs(
        SymMatrix.from_dense(a2), np.zeros(2), np.zeros(2), 1.0, rows
    )
    assert not rep2.holds


def test_build_etrs_matches_grid():
    rng = np.random.default_rng(10)
    for trial in range(5):
        n = 3
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        w = np.array([-1.0, -1.0, rng.uniform(0.5, 2.0)])
        a = (q * w) @ q.T
        shifted_range = q[:, 2:]  # range of A - lam_min I is span{q3} + ...
        # rows inside range(A - lam_min I): combinations of eigvecs above lam_min
        b1 = q[:, 2] * rng.normal()
        x0 = rng.normal(size=n) * 0.2
        u = rng.uniform(0.5, 1.5)
        a_vec = rng.normal(size=n) * 0.4
        inst, rep, shift = reformulate.build_etrs(
            SymMatrix.from_dense(a), a_vec, x0, u, [(b1, 0.3)]
        )
        assert rep.holds
        prog, meta = reformulate.build_cr(inst)
        value, _ = solve_value(prog, meta)

        def f(pts):
            return np.einsum("pi,ij,pj->p", pts, a, pts) + pts @ a_vec

        def feas(pts):
            ok = np.sum((pts - x0) ** 2, axis=1) <= u
            ok &= pts @ b1 <= 0.3
            return ok

        radius = math.sqrt(u)
        box = (x0 - radius, x0 + radius)
        val_grid, _ = grid_opt(f, feas, box, h=radius / 40.0, sense="min")
        assert value == pytest.approx(val_grid, abs=2e-3), trial


def test_build_wd_single_point_at_center():
    prog, meta, rep = reformulate.build_wd(
        np.zeros(2), 1.0, np.zeros((1, 2)), np.array([2.0])
    )
    value, _ = solve_value(prog, meta)
    assert value == pytest.approx(2.0, abs=1e-7)  # w * r0^2
    assert rep.holds


def test_build_wd_symmetric_pair_matches_grid():
    delta = 0.4
    points = np.array([[delta, 0.0], [-delta, 0.0]])
    w = np.array([1.0, 1.0])
    prog, meta, rep = reformulate.build_wd(np.zeros(2), 1.0, points, w)
    assert rep.holds  # rank 1 <= n-1
    value, res = solve_value(prog, meta)

    def f(pts):
        d = [np.sum((pts - z) ** 2, axis=1) * wi for z, wi in zip(points, w)]
        return np.minimum(*d)

    def feas(pts):
        return np.sum(pts**2, axis=1) <= 1.0

    val_grid, _ = grid_opt(f, feas, (np.full(2, -1.0), np.full(2, 1.0)), 0.02, "max")
    assert value == pytest.approx(val_grid, abs=2e-3)


def test_build_wd_condition_fails_in_general_position():
    points = np.array([[1.0, 0.0], [0.0, 1.0], [0.3, 0.4]])
    _, _, rep = reformulate.build_wd(np.zeros(2), 1.0, points, np.ones(3))
    assert not rep.holds


def test_build_ttrs_band_example():
    prog, meta = reformulate.build_ttrs(
        SymMatrix.from_dense(-np.eye(2)), np.zeros(2), 1.0, 4.0
    )
    value, res = solve_value(prog, meta)
    assert value == pytest.approx(-2.0, abs=1e-7)
    assert res.z[meta.t_index[0]] == pytest.approx(4.0, abs=1e-5)


def test_build_ttrs_rejects_bad_band():
    with pytest.raises(InvalidBounds):
        reformulate.build_ttrs(SymMatrix.identity(2), np.zeros(2), 2.0, 1.0)


def test_build_ttrs_matches_grid():
    rng = np.random.default_rng(11)
    for trial in range(5):
        n = int(rng.integers(2, 4))
        a = rng.normal(size=(n, n))
        a = 0.5 * (a + a.T)
        b = rng.normal(size=n) * 0.5
        alpha, beta = 0.3, 1.8
        prog, meta = reformulate.build_ttrs(SymMatrix.from_dense(a), b, alpha, beta)
        value, _ = solve_value(prog, meta)

        def f(pts):
            return 0.5 * np.einsum("pi,ij,pj->p", pts, a, pts) + pts @ b

        def feas(pts):
            nrm = np.sum(pts**2, axis=1)
            return (nrm >= alpha) & (nrm <= beta)

        r = math.sqrt(beta)
        val_grid, _ = grid_opt(f, feas, (np.full(n, -r), np.full(n, r)), r / 40.0, "min")
        assert value == pytest.approx(val_grid, abs=2e-3), trial


def test_build_vtrs_reduces_to_etrs_shape():
    rng = np.random.default_rng(12)
    a = rng.normal(size=(2, 2))
    a = 0.5 * (a + a.T) - 1.5 * np.eye(2)
    cvec = rng.normal(size=2) * 0.4
    mu = np.array([0.2, -0.1])
    r = 1.1
    prog, meta, rep = reformulate.build_vtrs(
        SymMatrix.from_dense(a), cvec, balls_in=[(mu, r)]
    )
    value, _ = solve_value(prog, meta)
    inst, rep2, shift = reformulate.build_etrs(
        SymMatrix.from_dense(a), cvec, mu, r**2
    )
    v2, _ = solve_value(*reformulate.build_cr(inst))
    assert value == pytest.approx(v2, abs=1e-6)


def test_build_vtrs_matches_grid_with_condition():
    rng = np.random.default_rng(13)
    for trial in range(4):
        n = 2
        w = np.array([rng.uniform(0.5, 1.5), -1.0])
        a = np.diag(w)  # lam_min eigvec = e2; shifted range = span{e1}
        cvec = np.array([rng.normal() * 0.3, 0.0])
        mu_in = np.array([rng.normal() * 0.2, 0.0])
        r_in = rng.uniform(1.0, 1.5)
        mu_out = np.array([rng.normal() * 0.1, 0.0])
        r_out = rng.uniform(0.2, 0.5)
        poly = [(np.array([1.0, 0.0]), rng.uniform(0.3, 1.0))]
        prog, meta, rep = reformulate.build_vtrs(
            SymMatrix.from_dense(a),
            cvec,
            balls_in=[(mu_in, r_in)],
            balls_out=[(mu_out, r_out)],
            poly_rows=poly,
        )
        assert rep.holds
        res = conesolver.solve(prog)
        assert res.status == "Optimal"
        value = meta.original_value(res)

        def f(pts):
            return np.einsum("pi,ij,pj->p", pts, a, pts) + pts @ cvec

        def feas(pts):
            ok = np.sum((pts - mu_in) ** 2, axis=1) <= r_in**2
            ok &= np.sum((pts - mu_out) ** 2, axis=1) >= r_out**2
            ok &= pts @ poly[0][0] <= poly[0][1]
            return ok

        box = (mu_in - r_in, mu_in + r_in)
        val_grid, _ = grid_opt(f, feas, box, r_in / 50.0, "min")
        assert value == pytest.approx(val_grid, abs=2e-3), trial


def test_build_cr2_equality_row_matches_grid():
    # sphere equality ||x||^2 = 1 via l = u, maximized uniform objective:
    # optimum is 1 + 2||b_0|| at x = b_0/||b_0||
    rng = np.random.default_rng(15)
    for _ in range(3):
        b0 = rng.normal(size=2) * 0.4
        inst = QcqpInstance(
            2,
            [SymMatrix.identity(2)],
            np.array([[-1.0], [1.0]]),  # min -x'x - 2 b0'x
            np.vstack([-b0, np.zeros(2)]),
            np.zeros(2),
            [Bound(1.0, 1.0)],
            sense="min",
        )
        k = reformulate.lift_set_twosided(inst)
        assert reformulate.check_condition_cc(inst, k).holds
        prog, meta = reformulate.build_cr2(inst)
        value, res = solve_value(prog, meta)
        assert -value == pytest.approx(1.0 + 2.0 * np.linalg.norm(b0), abs=1e-7)
        # polar grid over the sphere, the natural oracle for the equality row
        theta = np.arange(0.0, 2.0 * math.pi, 1e-4)
        circle = np.column_stack([np.cos(theta), np.sin(theta)])
        vg = float((1.0 + 2.0 * circle @ b0).max())
        assert -value == pytest.approx(vg, abs=2e-3)


def test_condition_cc_psd_rank_clause():
    # Q PSD with rank r and constraint terms inside a (r-1)-dimensional
    # slice of its range: the union condition holds
    rng = np.random.default_rng(16)
    n, r = 4, 3
    basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
    q = SymMatrix.from_dense(
        (basis[:, :r] * rng.uniform(0.5, 2.0, r)) @ basis[:, :r].T
    )
    b_rows = rng.normal(size=(2, r - 1)) @ basis[:, : r - 1].T
    inst = QcqpInstance(
        n,
        [q],
        np.array([[-1.0], [1.0], [1.0]]),
        np.vstack([np.zeros(n), b_rows]),
        np.zeros(3),
        [Bound(-1.0, 1.0), Bound(-math.inf, 2.0)],
        sense="min",
    )
    k = reformulate.lift_set_twosided(inst)
    cert = reformulate.check_condition_cc(inst, k)
    assert cert.holds
    assert cert.dims[0] == (n - r) + (r - 1)  # null(Q) plus the b-slice
    # three generic terms plus the null direction span all of R^4: fails
    inst2 = QcqpInstance(
        n,
        [q],
        np.array([[-1.0], [1.0], [1.0], [1.0]]),
        np.vstack([np.zeros(n), rng.normal(size=(3, n))]),
        np.zeros(4),
        [Bound(-1.0, 1.0), Bound(-math.inf, 2.0), Bound(-math.inf, 2.0)],
        sense="min",
    )
    assert not reformulate.check_condition_cc(inst2, k).holds


def test_build_socp_indefinite_examples():
    # no linear terms: condition 0 <= min(1,1)-1 holds
    inst = UqInstance(
        2,
        SymMatrix.from_dense(np.diag([1.0, -1.0])),
        np.zeros((2, 2)),
        np.zeros(2),
        [Bound(-1.0, 1.0)],
    )
    _, _, rep = reformulate.build_socp_indefinite(inst)
    assert rep.holds and rep.rank == 0
    # one linear term against min(r1, r2) - 1 = 0 fails
    inst2 = UqInstance(
        3,
        SymMatrix.from_dense(np.diag([1.0, 1.0, -1.0])),
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        np.zeros(2),
        [Bound(-1.0, 1.0)],
    )
    _, _, rep2 = reformulate.build_socp_indefinite(inst2)
    assert not rep2.holds


def test_build_socp_indefinite_rejects_definite():
    inst = UqInstance(
        2,
        SymMatrix.identity(2),
        np.zeros((2, 2)),
        np.zeros(2),
        [Bound(-math.inf, 1.0)],
    )
    with pytest.raises(WrongShape):
        reformulate.build_socp_indefinite(inst)


def test_build_socp_indefinite_matches_grid():
    rng = np.random.default_rng(14)
    for trial in range(4):
        n = 3
        qmat = np.diag([1.0, rng.uniform(0.5, 2.0), -rng.uniform(0.5, 2.0)])
        inst = UqInstance(
            n,
            SymMatrix.from_dense(qmat),
            np.zeros((3, n)),
            np.zeros(3),
            [Bound(-0.5, 1.0), Bound(-math.inf, 2.0)],
        )
        prog, meta, rep = reformulate.build_socp_indefinite(inst)
        assert rep.holds
        res = conesolver.solve(prog)
        assert res.status == "Optimal"
        value = meta.original_value(res)

        def f(pts):
            return np.einsum("pi,ij,pj->p", pts, qmat, pts)

        def feas(pts):
            v = f(pts)
            return (v >= -0.5) & (v <= 1.0) & (v <= 2.0)

        box = (np.full(n, -1.6), np.full(n, 1.6))
        val_grid, _ = grid_opt(f, feas, box, 0.05, "max")
        assert value == pytest.approx(val_grid, abs=2e-3), trial
