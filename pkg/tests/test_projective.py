import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from l2gain import metric_ball_to_norm_ball, proj_dist, separation, separation_to_metric

from _oracles import random_pairs, ref_dist, triangle_search

vec = st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2).map(np.array).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_examples():
    x = np.array([0.6, 0.8])
    assert proj_dist(x, x) == 0.0
    assert proj_dist(x, 2 * x) == pytest.approx(0.5)
    assert proj_dist([0.13, 0.0], [0.1, 0.0]) == pytest.approx(0.03 / 0.13)


def test_matches_reference(rng):
    X, Y = random_pairs(rng, 2000, dim=3)
    d = proj_dist(X, Y)
    ref = np.array([ref_dist(x, y) for x, y in zip(X, Y)])
    assert np.allclose(d, ref, rtol=1e-12, atol=0)


def test_zero_rejected():
    with pytest.raises(ValueError):
        proj_dist([0.0, 0.0], [1.0, 0.0])


@given(vec, vec, st.floats(-50, 50).filter(lambda a: abs(a) > 1e-3))
def test_symmetry_and_scale_invariance(x, y, a):
    d = proj_dist(x, y)
    assert d == pytest.approx(proj_dist(y, x), rel=1e-12, abs=1e-15)
    assert proj_dist(a * x, a * y) == pytest.approx(d, rel=1e-9, abs=1e-12)
    assert 0.0 <= d <= 2.0


def test_ball_factors():
    assert metric_ball_to_norm_ball(0.5) == 1.0
    assert metric_ball_to_norm_ball(0.3) == pytest.approx(3 / 7)
    # the exact ratio is 1 / (1 - eps), so it sits 1e-6 (plus 1e-12) above 1
    ratio = metric_ball_to_norm_ball(1e-6) / 1e-6
    assert ratio == pytest.approx(1 / (1 - 1e-6), rel=1e-12)
    assert abs(ratio - 1) < 1.1e-6
    assert separation_to_metric(0.999999) == pytest.approx(0.5, abs=1e-6)
    assert separation_to_metric(0.5) == pytest.approx(1 / 3)
    for f in (metric_ball_to_norm_ball, separation_to_metric):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                f(bad)


def test_separation_implication_on_random_pairs(rng):
    X, Y = random_pairs(rng, 100_000)
    eta = rng.uniform(0.01, 0.99, X.shape[0])
    far = np.linalg.norm(X - Y, axis=1) > eta * np.linalg.norm(X, axis=1)
    assert far.sum() > 10_000
    assert np.all(proj_dist(X[far], Y[far]) > eta[far] / (1 + eta[far]) * (1 - 1e-12))


def test_separation_values():
    x, y = np.array([1.0, 0.0]), np.array([-1.0, 0.0])
    assert separation(x, y) == 1.0
    assert separation(x, 3 * x) == pytest.approx(0.5)


def test_triangle_inequality_holds_for_euclidean_norm():
    # a seeded adversarial search finds nothing beyond rounding in the plane
    best, _ = triangle_search(proj_dist, dim=2, starts=60)
    assert best < 1e-12


def test_triangle_inequality_fails_for_l1_norm():
    def d1(x, y):
        n = lambda a: np.linalg.norm(a, ord=1, axis=-1)
        return n(np.asarray(x) - np.asarray(y)) / np.maximum(n(x), n(y))

    x, y, z = np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0])
    assert d1(x, z) > d1(x, y) + d1(y, z)
    assert math.isclose(d1(x, z), 2.0) and math.isclose(d1(x, y) + d1(y, z), 1.0)
