import math

import numpy as np
import pytest

from l2gain import Annulus, Constant, Linear, Saturation, Zero
from l2gain.experiments import (
    check_adversary,
    check_approx,
    check_cover,
    check_gain,
    check_sandwich,
    check_scaling,
    fit_slope,
    run_adversary,
    run_approx,
    run_cover,
    run_gain_convergence,
    run_sandwich,
    run_scaling,
)


def test_fit_slope_exact():
    d = [0.4, 0.2, 0.1, 0.05]
    assert fit_slope(d, [3 * x**-2 for x in d]) == pytest.approx(2.0, abs=1e-12)


def test_scaling_interval_pair():
    # two intervals [-10,-1] and [1,10]; sizes are countable by hand
    rep = run_scaling(Annulus(1, 1.0, 10.0), deltas=[0.4, 0.28, 0.2, 0.14, 0.1], seed=0)
    assert abs(rep.fitted_slope - 1.0) <= 0.3
    for r in rep.rows:
        # optimal at the certified radius <= greedy size <= optimal at delta
        assert 2 * math.ceil(9 / (2 * r["certified_radius"])) <= r["size"] <= 2 * math.ceil(9 / (2 * r["delta"]))
    assert check_scaling(rep.rows, rep.summary()) == []


def test_scaling_annulus2():
    rep = run_scaling(Annulus(2, 1.0, 2.0), seed=0)
    assert abs(rep.fitted_slope - 2.0) <= 0.4
    assert rep.D1_hat <= rep.D2_hat
    assert all(r["volume_lower"] <= r["size"] for r in rep.rows)
    assert [r["delta"] for r in rep.rows] == sorted(r["delta"] for r in rep.rows)


def test_scaling_rejects_bad_radii():
    U = Annulus(2, 1.0, 2.0)
    with pytest.raises(ValueError):
        run_scaling(U, deltas=[0.4, 0.2, 0.1])
    with pytest.raises(ValueError):
        run_scaling(U, deltas=[0.1, 0.2, 0.3, 0.4])


def test_scaling_summary_mismatch_flagged():
    rep = run_scaling(Annulus(1, 1.0, 10.0), seed=0)
    s = rep.summary()
    s["fitted_slope"] += 0.01
    assert check_scaling(rep.rows, s)


def test_cover_rows_pass_checks(annulus2):
    rows = run_cover(annulus2, [0.4, 0.2], seed=0)
    assert len(rows) == 6
    assert check_cover(rows) == []
    bad = [dict(r) for r in rows]
    for r in bad:
        if r["method"] == "volume_lower":
            r["size"] = 1e9
    assert check_cover(bad)


def test_sandwich_coarse_and_ordered(annulus2):
    rows = run_sandwich(annulus2, [0.45, 0.3, 0.2], seed=0, workers=2)
    assert check_sandwich(rows) == []
    coarse = rows[-1]
    assert coarse["eta"] == 0.45
    assert coarse["lower"] <= 2 and coarse["mid_lo"] <= 2


def test_sandwich_halving_growth(annulus2):
    rows = {r["eta"]: r for r in run_sandwich(annulus2, [0.2, 0.1], seed=0)}
    ratio = rows[0.1]["mid_hi"] / rows[0.2]["mid_hi"]
    # asymptotically 4 in n=2; greedy ties add a little on either side
    assert 2.0 <= ratio <= 4.4


def test_sandwich_workers_match_serial(annulus2):
    a = run_sandwich(annulus2, [0.3, 0.2], seed=0, workers=1)
    b = run_sandwich(annulus2, [0.3, 0.2], seed=0, workers=2)
    assert a == b


@pytest.mark.parametrize("H,L", [(Zero(), 1.0), (Linear(np.diag([2.0, 1.0])), 2.0), (Saturation(1.0), 1.0)])
def test_gain_convergence_monotone(H, L, annulus2):
    rows = run_gain_convergence(H, annulus2, L, [0.3, 0.2, 0.1], seed=0)
    assert check_gain(rows) == []
    gaps = [r["gap"] for r in rows]
    assert gaps == sorted(gaps)


def test_gain_zero_and_linear_rows(annulus2):
    for r in run_gain_convergence(Zero(), annulus2, 1.0, [0.2], seed=0):
        assert r["gamma_low"] == 0.0
    for r in run_gain_convergence(Linear(np.diag([2.0, 1.0])), annulus2, 2.0, [0.2, 0.1], seed=0):
        assert r["gamma_low"] <= 2.0 <= r["gamma_high"]
        assert r["oracle_gain"] == pytest.approx(2.0)


def test_gain_check_catches_tampering(annulus2):
    rows = run_gain_convergence(Constant([3.0, 0.0]), annulus2, 1.0, [0.2, 0.1], seed=0)
    rows[0]["gamma_high"] = rows[0]["oracle_gain"] - 0.5
    assert check_gain(rows)


def test_approx_rows(annulus2):
    rows = run_approx(Saturation(1.0), annulus2, [0.5, 0.25], seed=0)
    assert [r["eps"] for r in rows] == [0.25, 0.5]
    assert check_approx(rows) == []
    assert rows[0]["samples"] > rows[1]["samples"]


def test_adversary_report(annulus2):
    rep = run_adversary({"kind": "envelope", "budget": 3}, annulus2, 1.0, 0.3, seed=0)
    assert rep["samples"] == 3 < rep["packing_bound"]
    assert check_adversary(rep) == []
    rep["identical"] = False
    assert check_adversary(rep)
