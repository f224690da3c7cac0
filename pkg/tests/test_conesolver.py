import itertools
import math

import numpy as np
import pytest

from socqp import conesolver, model, reformulate
from socqp.conesolver import ConeProgram, DualPoint, SocBlock, SolveOptions
from socqp.errors import InvalidMultiplier, InvalidProgram
from socqp.linalg import SymMatrix
from socqp.model import Bound, UqInstance

from helpers import random_uq


def norm_program():
    # min t s.t. ||x|| <= t with x pinned to (3, 4)
    soc = [
        SocBlock(
            a=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            b=np.zeros(2),
            c=np.array([0.0, 0.0, 1.0]),
            d=0.0,
        )
    ]
    return ConeProgram(
        c=np.array([0.0, 0.0, 1.0]),
        e=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        f=np.array([3.0, 4.0]),
        soc=soc,
    )


def test_norm_minimization():
    res = conesolver.solve(norm_program())
    assert res.status == "Optimal"
    assert res.objective == pytest.approx(5.0, abs=1e-6)


def test_example1_relaxation_value():
    inst = UqInstance(
        1,
        SymMatrix.identity(1),
        np.array([[0.0], [1.0], [-1.0]]),
        np.zeros(3),
        [Bound(1.0, 3.0), Bound(-1.0, 3.0)],
    )
    prog, meta = reformulate.build_socp_uq(inst)
    res = conesolver.solve(prog)
    assert res.status == "Optimal"
    assert meta.original_value(res) == pytest.approx(3.0, abs=1e-6)


def test_box_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(0)
    n = 4
    c = rng.normal(size=n)
    g = np.vstack([np.eye(n), -np.eye(n)])
    h = np.concatenate([rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, n)])
    res = conesolver.solve(ConeProgram(c=c, g=g, h=h))
    assert res.status == "Optimal"
    best = min(
        c @ np.array(v)
        for v in itertools.product(*[(-h[n + k], h[k]) for k in range(n)])
    )
    assert res.objective == pytest.approx(best, abs=1e-6)


def test_invalid_program_dimensions():
    with pytest.raises(InvalidProgram):
        ConeProgram(c=np.array([1.0]), g=np.ones((1, 2)), h=np.ones(1))


def test_unbounded_reports_ray():
    soc = [
        SocBlock(
            a=np.array([[1.0, 0.0], [0.0, 0.5]]),
            b=np.array([0.0, -0.5]),
            c=np.array([0.0, 0.5]),
            d=0.5,
        )
    ]
    res = conesolver.solve(ConeProgram(c=np.array([0.0, -1.0]), soc=soc))
    assert res.status == "Unbounded"
    assert res.certificate_kind == "improving_ray"
    ray = res.certificate
    assert ray is not None and ray[1] > 0


def test_infeasible_reports_farkas():
    prog = ConeProgram(
        c=np.array([0.0]),
        g=np.array([[1.0], [-1.0]]),
        h=np.array([-1.0, -1.0]),
    )
    res = conesolver.solve(prog)
    assert res.status == "Infeasible"
    assert res.certificate_kind == "farkas_dual"


def test_determinism_bit_identical():
    prog = norm_program()
    r1 = conesolver.solve(prog)
    r2 = conesolver.solve(prog)
    assert r1.iterations == r2.iterations
    assert np.array_equal(r1.z, r2.z)
    assert np.array_equal(r1.lam_lin, r2.lam_lin)


def test_objective_monotone_under_added_rows():
    rng = np.random.default_rng(1)
    n = 3
    c = rng.normal(size=n)
    g = np.vstack([np.eye(n), -np.eye(n)])
    h = np.ones(2 * n)
    base = conesolver.solve(ConeProgram(c=c, g=g, h=h))
    prev = base.objective
    for k in range(3):
        extra = rng.normal(size=(k + 1, n))
        rhs = np.abs(rng.normal(size=k + 1)) * 0.5
        res = conesolver.solve(
            ConeProgram(c=c, g=np.vstack([g, extra]), h=np.concatenate([h, rhs]))
        )
        if res.status == "Optimal":
            assert res.objective >= prev - 1e-7
            prev = res.objective


def test_solver_accuracy_on_random_feasible_socps():
    rng = np.random.default_rng(2)
    for trial in range(10):
        n = int(rng.integers(3, 7))
        z0 = rng.normal(size=n)
        c = rng.normal(size=n)
        g = np.vstack([rng.normal(size=(4, n)), np.eye(n), -np.eye(n)])
        slack = np.abs(rng.normal(size=4)) + 0.1
        h = np.concatenate([g[:4] @ z0 + slack, np.full(2 * n, 10.0)])
        a = rng.normal(size=(2, n))
        b = rng.normal(size=2)
        ck = rng.normal(size=n)
        d = float(np.linalg.norm(a @ z0 + b) - ck @ z0 + 0.5)
        prog = ConeProgram(c=c, g=g, h=h, soc=[SocBlock(a, b, ck, d)])
        res = conesolver.solve(prog)
        assert res.status == "Optimal", trial
        scale = 1.0 + abs(res.objective)
        assert res.pres <= 1e-7 and res.dres <= 1e-7
        assert res.gap <= 1e-7 * scale
        assert prog.violation(res.z) <= 1e-6


# ---------------------------------------------------------------------------
# closed-form dual
# ---------------------------------------------------------------------------


def single_ball(radius2=1.0):
    return UqInstance(
        2,
        SymMatrix.identity(2),
        np.zeros((2, 2)),
        np.zeros(2),
        [Bound(-math.inf, radius2)],
    )


def test_dual_value_zero_multiplier_is_unbounded():
    assert conesolver.dual_value(single_ball(), DualPoint(np.zeros(1))) == math.inf


def test_dual_value_limit_toward_one():
    inst = UqInstance(
        1,
        SymMatrix.identity(1),
        np.zeros((2, 1)),
        np.zeros(2),
        [Bound(-math.inf, 1.0)],
    )
    vals = [
        conesolver.dual_value(inst, DualPoint(np.array([1.0 + eps])))
        for eps in (1e-1, 1e-2, 1e-3, 1e-4)
    ]
    assert all(np.diff(vals) < 0)
    assert vals[-1] == pytest.approx(1.0, abs=1e-3)
    # the infimum over the grid matches max x^2 on [-1, 1]
    grid = [
        conesolver.dual_value(inst, DualPoint(np.array([lam])))
        for lam in np.linspace(1.0, 3.0, 200)
    ]
    assert min(grid) == pytest.approx(1.0, abs=1e-8)


def test_dual_value_rejects_multiplier_on_infinite_bound():
    with pytest.raises(InvalidMultiplier):
        conesolver.dual_value(single_ball(), DualPoint(np.array([-1.0])))


def test_certify_strong_duality_single_ball():
    inst = single_ball()
    prog, _ = reformulate.build_socp_uq(inst)
    res = conesolver.solve(prog)
    rep = conesolver.certify_strong_duality(inst, res)
    assert rep.holds
    assert abs(rep.gap) <= 1e-5 * (1.0 + abs(rep.relaxation_value))


def test_certify_strong_duality_gap_instance():
    # exactness fails here, but relaxation-level duality still closes
    inst = UqInstance(
        1,
        SymMatrix.identity(1),
        np.array([[0.0], [1.0], [-1.0]]),
        np.zeros(3),
        [Bound(1.0, 3.0), Bound(-1.0, 3.0)],
    )
    prog, _ = reformulate.build_socp_uq(inst)
    res = conesolver.solve(prog)
    rep = conesolver.certify_strong_duality(inst, res)
    assert rep.holds
    assert rep.relaxation_value == pytest.approx(3.0, abs=1e-6)


def test_certify_strong_duality_random_exact_instances():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(2, 4))
        inst = random_uq(rng, n, int(rng.integers(1, n)), two_sided_prob=0.4)
        prog, _ = reformulate.build_socp_uq(inst)
        res = conesolver.solve(prog)
        assert res.status == "Optimal"
        rep = conesolver.certify_strong_duality(inst, res)
        assert rep.holds, rep


def test_weak_duality_sampled():
    rng = np.random.default_rng(4)
    inst = random_uq(rng, 2, 2, two_sided_prob=0.0)
    # finite dual values bound every feasible objective value
    for _ in range(200):
        lam = np.abs(rng.normal(size=2)) + np.array([0.6, 0.6])
        dval = conesolver.dual_value(inst, DualPoint(lam))
        if not math.isfinite(dval):
            continue
        x = rng.normal(size=2) * 0.5
        if model.is_feasible(inst, x, tol=0.0):
            assert model.eval_f(inst, 0, x) <= dval + 1e-9


def test_equality_only_program():
    prog = ConeProgram(
        c=np.array([0.0, 0.0]),
        e=np.array([[1.0, 1.0]]),
        f=np.array([2.0]),
    )
    res = conesolver.solve(prog)
    assert res.status == "Optimal"
    prog2 = ConeProgram(
        c=np.array([1.0, 0.0]),
        e=np.array([[1.0, 1.0]]),
        f=np.array([2.0]),
    )
    assert conesolver.solve(prog2).status == "Unbounded"


def test_maxiter_returns_best_iterate():
    prog = norm_program()
    res = conesolver.solve(prog, SolveOptions(max_iter=1))
    assert res.status == "MaxIter"
    assert np.all(np.isfinite(res.z))
