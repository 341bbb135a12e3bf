import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2gain import Annulus, Bump, Constant, Linear, Saturation, Zero, empirical_lipschitz, true_gain_oracle
from l2gain.operators import operator_from_dict, sigma_max_power


def test_evaluate_examples():
    assert np.array_equal(Zero()([0.3, -1.0]), [0.0, 0.0])
    assert np.array_equal(Linear([[2.0, 0.0], [0.0, 1.0]])([1.0, 0.0]), [2.0, 0.0])
    b = Bump([[1.0, 0.0]], 2.0)
    assert np.array_equal(b([1.0, 0.0]), [0.0, 0.0])


def test_bump_unit_distance():
    b = Bump([[1.0, 0.0]], 2.0, f=[0.0, 1.0])
    y = b([2.0, 0.0])
    assert np.allclose(y, [0.0, 2.0]) and np.linalg.norm(y) == pytest.approx(2.0)


def test_bump_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        Bump([[1.0, 0.0]], 1.0, f=[2.0, 0.0])


def test_zero_input_rejected():
    with pytest.raises(ValueError):
        Linear(np.eye(2))([0.0, 0.0])


def test_query_counter_threadsafe():
    H = Saturation(1.0)
    X = np.ones((10, 2))

    def work():
        for _ in range(50):
            H(X)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert H.query_count == 4 * 50 * 10
    H.reset_count()
    assert H.query_count == 0


def test_sigma_max_cross_check(rng):
    for shape in ((2, 2), (3, 5), (6, 4)):
        A = rng.normal(size=shape)
        assert sigma_max_power(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)
    assert sigma_max_power(np.zeros((2, 2))) == 0.0
    # the all-ones start is orthogonal to the top right singular vector here
    assert sigma_max_power(np.array([[1.0, 0.0], [0.0, -3.0]]) @ np.array([[1, 1], [1, -1]]) / math.sqrt(2)) == pytest.approx(3.0)


def test_gain_oracle_examples(annulus2):
    g = true_gain_oracle(Zero(), annulus2)
    assert g.lower == 0.0 and g.upper == 0.0 and g.exact == 0.0
    H = Linear([[2.0, 0.0], [0.0, 1.0]])
    g = true_gain_oracle(H, annulus2)
    assert g.exact == pytest.approx(2.0)
    assert g.lower <= 2.0 + 1e-12 <= g.upper + 1e-12
    assert g.lower == pytest.approx(2.0, abs=0.01)
    g = true_gain_oracle(Constant([3.0, 0.0]), annulus2)
    assert g.exact == 3.0 and g.lower == pytest.approx(3.0)


def test_saturation_gain_bracket(annulus2):
    # tanh(t)/t decreases, so the gain sits on the unit circle; dense angle sweep as reference
    th = np.linspace(0, 2 * np.pi, 200_001)
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    ref = np.linalg.norm(np.tanh(U), axis=1).max()
    g = true_gain_oracle(Saturation(1.0), annulus2)
    assert g.lower <= ref <= g.upper


def test_empirical_lipschitz(annulus2):
    assert empirical_lipschitz(Zero(), annulus2) == 0.0
    assert empirical_lipschitz(Saturation(1.0), annulus2) <= 1.0
    anchors = np.array([[1.0, 0.0], [-1.0, 0.0]])
    v = empirical_lipschitz(Bump(anchors, 2.0), annulus2)
    assert 1.5 <= v <= 2.0 + 1e-12
    assert empirical_lipschitz(Linear([[2.0, 0.0], [0.0, 1.0]]), annulus2) <= 2.0 + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.2, 3.0))
def test_declared_constants_hold(entries, s):
    U = Annulus(2, 1.0, 2.0)
    for H in (Linear(np.reshape(entries, (2, 2))), Saturation(s)):
        assert empirical_lipschitz(H, U, pairs=500, seed=1) <= H.lipschitz * (1 + 1e-9) + 1e-12


def test_dict_round_trip():
    for H in (Zero(), Constant([3.0, 0.0]), Linear([[2.0, 0.0], [0.0, 1.0]]), Saturation(2.0),
              Bump([[1.0, 0.0]], 1.5, [0.0, 1.0])):
        back = operator_from_dict(H.to_dict())
        x = np.array([1.3, -0.4])
        assert np.array_equal(back(x), H(x)) and back.lipschitz == H.lipschitz
    with pytest.raises(ValueError):
        operator_from_dict({"kind": "quadratic"})
