import math

import numpy as np
import pytest

from l2gain import (
    Annulus,
    Constant,
    Linear,
    Saturation,
    Zero,
    build_interpolant,
    calibrate_eta,
    estimate_gain,
    gain_via_approximant,
    per_cell_gain_bound,
    true_gain_oracle,
    two_sample_gain_estimate,
)
from l2gain.gain import SampledData, gap_bound_for, sampling_cover
from l2gain.projective import proj_dist


def test_per_cell_examples():
    assert per_cell_gain_bound([2.0, 0.0], [1.0, 0.0], 0.5, 1.0) == pytest.approx(1.0)
    assert per_cell_gain_bound([1.0, 0.0], [0.0, 0.0], 0.25, 1.0) == pytest.approx(1 / 3)
    assert per_cell_gain_bound([2.0, 0.0], [1.0, 0.0], 1e-12, 5.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        per_cell_gain_bound([1.0, 0.0], [0.0, 0.0], 1.0, 1.0)


def test_per_cell_bound_is_sound(rng):
    H = Saturation(1.0)
    for _ in range(200):
        u = rng.normal(size=2) * 2
        delta = rng.uniform(0, 0.9) * np.linalg.norm(u)
        b = per_cell_gain_bound(u, H(u), delta, 1.0)
        step = rng.normal(size=(100, 2))
        step *= (delta * rng.random(100) / np.linalg.norm(step, axis=1))[:, None]
        X = u + step
        assert np.all(np.linalg.norm(H(X), axis=1) / np.linalg.norm(X, axis=1) <= b + 1e-12)


def test_zero_operator_closed_form(annulus2):
    for eta in (0.1, 0.3):
        est, data = estimate_gain(Zero(), annulus2, 1.0, eta, seed=0)
        assert est.gamma_low == 0.0
        assert est.gamma_high == pytest.approx(eta / (1 - 2 * eta), rel=1e-12)
        assert est.gap_bound == pytest.approx(est.gap, rel=1e-12)
        assert data.budget_used == est.cover.size


def test_linear_sandwich(annulus2):
    est, _ = estimate_gain(Linear([[2.0, 0.0], [0.0, 1.0]]), annulus2, 2.0, 0.05, seed=0)
    assert est.gamma_low <= 2.0 <= est.gamma_high
    assert est.gap <= est.gap_bound * (1 + 1e-12)


def test_saturation_gap_halves(annulus2):
    H = Saturation(1.0)
    g1 = estimate_gain(H, annulus2, 1.0, 0.1, seed=0)[0].gap
    g2 = estimate_gain(H, annulus2, 1.0, 0.05, seed=0)[0].gap
    assert 1.7 <= g1 / g2 <= 2.6


def test_sampling_cover_certified_radius(annulus2):
    c = sampling_cover(annulus2, 0.2, seed=3)
    assert c.certified_radius == pytest.approx(0.2, rel=1e-12)
    P, _ = annulus2.proxy_grid(0.01, seed=8)
    d = np.min(proj_dist(P[:, None, :], c.centers[None, :, :]), axis=1)
    assert d.max() <= 0.2


def test_estimate_counts_queries(annulus2):
    H = Constant([3.0, 0.0])
    est, data = estimate_gain(H, annulus2, 1.0, 0.2, seed=0)
    assert H.query_count == data.budget_used == len(est.per_cell)
    # the gain 3 is attained on the inner circle, which centers only approach
    assert est.gamma_low <= 3.0 <= est.gamma_high
    assert est.gamma_low == pytest.approx(3.0, rel=0.02)


def test_estimate_rejects_bad_eta(annulus2):
    for bad in (0.0, 0.5):
        with pytest.raises(ValueError):
            estimate_gain(Zero(), annulus2, 1.0, bad)


def test_gap_bound_formula():
    assert gap_bound_for(0.25, 1.0, 1.0) == pytest.approx(0.25 * 2 / 0.5)


def test_calibrate_eta(annulus2):
    est, _ = calibrate_eta(Saturation(1.0), annulus2, 1.0, 0.5, seed=0)
    assert est.gap_bound <= 0.5
    # no slack left to give: a slightly larger eta would bust the target
    assert est.eta * 1.05 > 0.5 / (1.0 + est.gamma_low + 1.0)
    with pytest.raises(ValueError):
        calibrate_eta(Zero(), annulus2, 1.0, 0.0)


def test_two_sample_examples(annulus2):
    g, data = two_sample_gain_estimate(Zero(), annulus2, 1.0)
    assert g == pytest.approx(math.sqrt(2)) and data.budget_used == 2
    g, _ = two_sample_gain_estimate(Constant([3.0, 0.0]), annulus2, 0.0)
    assert g == 3.0
    g, _ = two_sample_gain_estimate(Linear([[2.0, 0.0], [0.0, 1.0]]), annulus2, 2.0)
    assert 2.0 <= g <= 2 + 2 * math.sqrt(2)


def test_two_sample_needs_symmetric_set():
    from l2gain import Box

    with pytest.raises(ValueError):
        two_sample_gain_estimate(Zero(), Box((1.0, 1.0), (2.0, 2.0), 0.5), 1.0)


def test_gain_via_approximant(annulus2):
    data = SampledData()
    for u in ([1.0, 0.0], [0.0, 1.5], [-2.0, 0.0]):
        data.query(Zero(), u)
    H1 = build_interpolant(data, 1.0)
    eps = 0.4
    g = gain_via_approximant(H1, annulus2, eps, proxy_fill=0.02)
    # the slack is the certified proxy bound of a gain that is exactly 0
    _, disp = annulus2.proxy_grid(0.02)
    assert eps / 2 <= g <= eps / 2 + disp * H1.effective_lipschitz / annulus2.min_norm + 1e-12

    cover = sampling_cover(annulus2, 0.1, seed=0)
    data = SampledData()
    H = Linear([[2.0, 0.0], [0.0, 1.0]])
    for u in cover.centers:
        data.query(H, u)
    H1 = build_interpolant(data, 2.0)
    assert gain_via_approximant(H1, annulus2, 0.2) >= 2.0


def test_approximant_slack_shrinks_with_fill(annulus2):
    data = SampledData()
    H = Saturation(1.0)
    for u in sampling_cover(annulus2, 0.2, seed=0).centers:
        data.query(H, u)
    H1 = build_interpolant(data, 1.0)
    slack = []
    for fill in (0.04, 0.02):
        b = true_gain_oracle(H1, annulus2, proxy_fill=fill, lipschitz=H1.effective_lipschitz)
        slack.append(b.upper - b.lower)
    # slack is dispersion times a constant, so halving the fill roughly halves it
    assert 1.6 <= slack[0] / slack[1] <= 2.6
