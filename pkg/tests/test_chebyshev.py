import math

import numpy as np
import pytest

from socqp import chebyshev, oracle
from socqp.errors import PreconditionViolated
from socqp.model import BallIntersection


def two_balls(offset=0.5, radius=1.0):
    return BallIntersection(
        2,
        np.array([[offset, 0.0], [-offset, 0.0]]),
        np.array([radius, radius]),
    )


def random_balls(rng, n, p, spread=0.6):
    centers = rng.normal(size=(p, n)) * spread
    radii = rng.uniform(1.0, 1.6, size=p)
    return BallIntersection(n, centers, radii)


def test_beck_center_single_ball():
    balls = BallIntersection(2, np.array([[0.7, -0.2]]), np.array([1.3]))
    center, lam, v = chebyshev.beck_center(balls)
    assert np.allclose(center, [0.7, -0.2], atol=1e-7)
    assert lam == pytest.approx([1.0])
    assert v == pytest.approx(1.3**2, abs=1e-6)


def test_beck_center_symmetric_pair_matches_grid():
    balls = two_balls()
    center, lam, v = chebyshev.beck_center(balls)
    assert abs(center[0]) < 1e-6
    g = oracle.grid_minmax_cc(balls, h=2e-3)
    assert v == pytest.approx(g.value, abs=5e-3)


def test_beck_center_concentric():
    balls = BallIntersection(
        2, np.array([[0.3, 0.3], [0.3, 0.3], [0.3, 0.3]]), np.array([2.0, 1.0, 1.5])
    )
    center, lam, v = chebyshev.beck_center(balls)
    assert np.allclose(center, [0.3, 0.3], atol=1e-6)
    assert v == pytest.approx(1.0, abs=1e-6)  # smallest radius squared


def test_beck_center_stays_in_hull():
    rng = np.random.default_rng(0)
    for _ in range(5):
        balls = random_balls(rng, 2, 4)
        center, lam, _ = chebyshev.beck_center(balls)
        assert np.all(lam >= -1e-9)
        assert lam.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(balls.centers.T @ lam, center, atol=1e-8)


def test_gamma_balls_examples():
    concentric = BallIntersection(
        2, np.array([[0.1, 0.1], [0.1, 0.1]]), np.array([1.0, 2.0])
    )
    assert chebyshev.gamma_balls(concentric) == pytest.approx(0.0, abs=1e-6)
    touching = two_balls(offset=1.0)
    assert chebyshev.gamma_balls(touching) == pytest.approx(1.0, abs=1e-6)


def test_gamma_balls_matches_grid():
    rng = np.random.default_rng(1)
    for _ in range(3):
        balls = random_balls(rng, 2, 5)
        got = chebyshev.gamma_balls(balls)
        lo = balls.centers.min(axis=0) - 0.5
        hi = balls.centers.max(axis=0) + 0.5
        axes = [np.arange(lo[k], hi[k], 2e-3) for k in range(2)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        ratios = np.max(
            [
                np.linalg.norm(pts - balls.centers[i], axis=1) / balls.radii[i]
                for i in range(balls.p)
            ],
            axis=0,
        )
        assert got == pytest.approx(float(ratios.min()), abs=2e-3)


def test_gamma_upper_examples():
    concentric = BallIntersection(
        2, np.array([[0.0, 0.0], [0.0, 0.0]]), np.array([1.0, 2.0])
    )
    assert chebyshev.gamma_upper(concentric) == 0.0
    pair = BallIntersection(
        2, np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, 1.0])
    )
    assert chebyshev.gamma_upper(pair) == pytest.approx(math.sqrt(2.0 / 6.0))


def test_gamma_upper_dominates_gamma():
    rng = np.random.default_rng(2)
    for _ in range(10):
        balls = random_balls(rng, 2, int(rng.integers(2, 6)))
        assert chebyshev.gamma_balls(balls) <= chebyshev.gamma_upper(balls) + 1e-9


def test_certified_single_ball_collapses():
    balls = BallIntersection(2, np.array([[0.4, 0.1]]), np.array([1.2]))
    r = chebyshev.chebyshev_certified(balls)
    assert r.v_dcc == pytest.approx(1.44, abs=1e-6)
    assert r.attained[0] == pytest.approx(1.44, abs=1e-5)
    assert r.attained[1] == pytest.approx(1.44, abs=1e-5)


def test_certified_rejects_empty_interior():
    with pytest.raises(PreconditionViolated):
        chebyshev.chebyshev_certified(two_balls(offset=1.0))
    with pytest.raises(PreconditionViolated):
        chebyshev.chebyshev_certified(two_balls(offset=1.5))


def test_certified_easy_case_matches_grid():
    balls = two_balls()
    r = chebyshev.chebyshev_certified(balls)
    g = oracle.grid_minmax_cc(balls, h=2e-3)
    assert r.v_dcc == pytest.approx(g.value, abs=5e-3)
    lo, hi = r.attained
    assert lo <= hi + 1e-9
    assert hi == pytest.approx(r.v_dcc, abs=1e-6)


def test_certified_chain_hard_case():
    rng = np.random.default_rng(3)
    for trial in range(6):
        balls = random_balls(rng, 2, int(rng.integers(4, 7)))
        if chebyshev.gamma_balls(balls) >= 0.97:
            continue
        r = chebyshev.chebyshev_certified(balls)
        scale = 1.0 + abs(r.v_dcc)
        lo, hi = r.attained
        assert r.guaranteed_ratio * r.v_dcc - 1e-4 * scale <= lo, trial
        assert lo <= hi + 1e-4 * scale
        assert hi <= r.v_dcc + 1e-4 * scale
        assert r.gamma <= r.gamma_upper + 1e-9
        # the oracle's min-max lower-bounds the relaxation value
        g = oracle.grid_minmax_cc(balls, h=5e-3)
        assert g.value <= r.v_dcc + g.error_bound + 1e-3


def test_certified_translation_invariance():
    rng = np.random.default_rng(4)
    balls = random_balls(rng, 2, 4)
    shift = np.array([3.2, -1.7])
    moved = BallIntersection(2, balls.centers + shift, balls.radii)
    r0 = chebyshev.chebyshev_certified(balls)
    r1 = chebyshev.chebyshev_certified(moved)
    assert np.abs(r1.center - shift - r0.center).max() <= 1e-7
    assert r1.v_dcc == pytest.approx(r0.v_dcc, abs=1e-7)
    assert r1.gamma == pytest.approx(r0.gamma, abs=1e-7)
    assert r1.attained[0] == pytest.approx(r0.attained[0], abs=1e-6)


def test_certified_far_point_lies_in_omega():
    rng = np.random.default_rng(5)
    balls = random_balls(rng, 2, 5)
    r = chebyshev.chebyshev_certified(balls)
    assert balls.contains(r.far_point, tol=1e-6)
    dist2 = float(np.sum((r.far_point - r.center) ** 2))
    assert dist2 == pytest.approx(r.attained[0], abs=1e-6)
