"""Batch experiments producing tables, and the row-level checks that validate them.

Every ``run_*`` function returns plain rows (lists of dicts) sorted by their key
column; every ``check_*`` function takes such rows, possibly re-read from disk,
and returns a list of failure messages.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import estimator_from_config, indistinguishability_experiment
from .covering import (
    cover_index_chain,
    grid_count_bound,
    grid_cover,
    greedy_cover,
    packing_lower_bound,
    volume_lower_bound,
)
from .gain import SampledData, estimate_gain, sampling_cover
from .interpolation import approximation_radius, build_interpolant, operator_distance
from .operators import Operator, true_gain_oracle
from .signals import InputSet

REL = 1e-12

DEFAULT_DELTAS = [0.4, 0.28, 0.2, 0.14, 0.1]
DEFAULT_ETAS = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]


def _map_cells(fn, items, workers: int = 1) -> list:
    # cells are independent and internally deterministic; order follows items
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_cover(U: InputSet, deltas, seed: int | None = 0, proxy_fill: float | None = None, keep_covers=False):
    rows, covers = [], {}
    for delta in sorted(deltas):
        fill = delta / 4 if proxy_fill is None else proxy_fill
        grid = grid_cover(U, delta)
        greedy = greedy_cover(U, delta, "norm", proxy_fill=fill, seed=seed)
        vol = volume_lower_bound(U, delta)
        rows.append(dict(delta=delta, method="grid", size=grid.size, certified=True,
                         certified_radius=grid.certified_radius, bound=float(grid_count_bound(U, delta))))
        rows.append(dict(delta=delta, method="greedy", size=greedy.size, certified=greedy.certified,
                         certified_radius=greedy.certified_radius, bound=math.nan))
        rows.append(dict(delta=delta, method="volume_lower", size=vol, certified=True,
                         certified_radius=delta, bound=math.nan))
        covers[delta] = {"grid": grid, "greedy": greedy}
    return (rows, covers) if keep_covers else rows


def check_cover(rows) -> list[str]:
    bad = []
    by_delta: dict[float, dict[str, dict]] = {}
    for r in rows:
        by_delta.setdefault(float(r["delta"]), {})[r["method"]] = r
    for delta, group in sorted(by_delta.items()):
        vol = group.get("volume_lower")
        grid = group.get("grid")
        if vol and grid and float(vol["size"]) > float(grid["size"]):
            bad.append(f"volume bound exceeds grid cover size at delta={delta}: {vol} vs {grid}")
        if grid and float(grid["size"]) > float(grid["bound"]):
            bad.append(f"grid cover exceeds its lattice count at delta={delta}: {grid}")
        greedy = group.get("greedy")
        if vol and greedy:
            # the greedy cover is certified only at its own (larger) radius
            if float(greedy["certified_radius"]) < delta:
                bad.append(f"greedy certified radius below nominal at delta={delta}: {greedy}")
    return bad


@dataclass
class ScalingReport:
    dim: int
    metric: str
    rows: list[dict] = field(default_factory=list)
    fitted_slope: float = math.nan
    D1_hat: float = math.nan
    D2_hat: float = math.nan

    def summary(self) -> dict:
        return {"dim": self.dim, "metric": self.metric, "fitted_slope": self.fitted_slope,
                "D1_hat": self.D1_hat, "D2_hat": self.D2_hat}


def fit_slope(deltas, sizes) -> float:
    """Least-squares slope of ``log size`` against ``log(1 / delta)``."""
    x = np.log(1.0 / np.asarray(deltas, dtype=float))
    y = np.log(np.asarray(sizes, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def run_scaling(U: InputSet, metric: str = "norm", deltas=None, seed: int | None = 0,
                fill_ratio: float | None = None, strategy: str = "auto") -> ScalingReport:
    """Greedy cover sizes over decreasing radii.

    Each radius gets its own proxy with fill ``fill_ratio * delta`` (times the
    minimum norm for the projective metric), so every cover in the series is
    built at the same relative resolution. The default ratio is 1/4 up to n=2
    and 1/2 beyond, which keeps n=3 proxies near a million points.
    """
    deltas = list(DEFAULT_DELTAS if deltas is None else deltas)
    if len(deltas) < 4 or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ValueError("need at least 4 strictly decreasing radii")
    if fill_ratio is None:
        fill_ratio = 0.25 if U.dim <= 2 else 0.5
    scale = U.min_norm if metric == "projective" else 1.0
    rep = ScalingReport(dim=U.dim, metric=metric)
    n = U.dim
    for delta in deltas:
        cover = greedy_cover(U, delta, metric, proxy_fill=fill_ratio * delta * scale, seed=seed, strategy=strategy)
        # the cover is only certified at its own radius, so bound the count there
        r = cover.certified_radius
        lower = volume_lower_bound(U, r if metric == "norm" else r / (1 - r) * U.radius_sup)
        rep.rows.append(dict(delta=delta, size=cover.size, certified_radius=cover.certified_radius,
                             volume_lower=lower))
    sizes = [r["size"] for r in rep.rows]
    rep.fitted_slope = fit_slope(deltas, sizes)
    scaled = [s * d**n for s, d in zip(sizes, deltas)]
    rep.D1_hat, rep.D2_hat = float(min(scaled)), float(max(scaled))
    rep.rows.sort(key=lambda r: r["delta"])
    return rep


def check_scaling(rows, summary: dict | None = None) -> list[str]:
    bad = []
    for r in rows:
        if float(r["volume_lower"]) > float(r["size"]):
            bad.append(f"volume bound exceeds cover size: {r}")
    if summary is not None and rows:
        rs = sorted(rows, key=lambda r: -float(r["delta"]))
        slope = fit_slope([float(r["delta"]) for r in rs], [float(r["size"]) for r in rs])
        if abs(slope - float(summary["fitted_slope"])) > 1e-9:
            bad.append(f"summary slope {summary['fitted_slope']} does not match rows ({slope})")
    return bad


def run_sandwich(U: InputSet, etas=None, seed: int | None = 0, proxy_fill: float | None = None,
                 workers: int = 1):
    def cell(eta):
        lower, mid_lo, mid_hi, upper = cover_index_chain(U, eta, proxy_fill=proxy_fill, seed=seed, check=False)
        return dict(eta=eta, lower=lower, mid_lo=mid_lo, mid_hi=mid_hi, upper=upper)

    return _map_cells(cell, sorted(DEFAULT_ETAS if etas is None else etas), workers)


def check_sandwich(rows) -> list[str]:
    bad = []
    for r in rows:
        lower, lo, hi, up = (float(r[k]) for k in ("lower", "mid_lo", "mid_hi", "upper"))
        if not (lower <= hi and lo <= hi and lo <= up):
            bad.append(f"cover-index chain out of order: {r}")
    return bad


def run_gain_convergence(H: Operator, U: InputSet, L: float, etas, seed: int | None = 0,
                         proxy_fill: float | None = None, oracle_fill: float = 0.02, workers: int = 1):
    oracle = true_gain_oracle(H, U, proxy_fill=oracle_fill, seed=seed)
    g_lo = oracle.exact if oracle.exact is not None else oracle.lower
    g_hi = oracle.exact if oracle.exact is not None else oracle.upper

    def cell(eta):
        est, data = estimate_gain(H, U, L, eta, seed=seed, proxy_fill=proxy_fill)
        return dict(eta=eta, samples=data.budget_used, gamma_low=est.gamma_low, gamma_high=est.gamma_high,
                    gap=est.gap, gap_bound=est.gap_bound, oracle_gain=g_lo, oracle_upper=g_hi)

    return _map_cells(cell, sorted(etas), workers)


def check_gain(rows) -> list[str]:
    bad = []
    prev_gap = -math.inf
    prev_samples = math.inf
    for r in sorted(rows, key=lambda r: float(r["eta"])):
        lo, hi, gb = float(r["gamma_low"]), float(r["gamma_high"]), float(r["gap_bound"])
        g_lo, g_hi = float(r["oracle_gain"]), float(r["oracle_upper"])
        if not lo <= hi:
            bad.append(f"gamma_low > gamma_high: {r}")
        if lo > g_hi + 1e-9:
            bad.append(f"gamma_low exceeds the oracle gain: {r}")
        if hi < g_lo - 1e-9:
            bad.append(f"gamma_high below the oracle gain: {r}")
        if "gap" in r and abs(float(r["gap"]) - (hi - lo)) > REL * max(1.0, hi):
            bad.append(f"gap column disagrees with gamma_high - gamma_low: {r}")
        if hi - lo > gb * (1 + REL) + 1e-15:
            bad.append(f"gap exceeds gap_bound: {r}")
        if hi - lo < prev_gap - 1e-12:
            bad.append(f"gap not monotone in eta: {r}")
        if int(float(r["samples"])) > prev_samples:
            bad.append(f"sample count grows with eta: {r}")
        prev_gap = hi - lo
        prev_samples = int(float(r["samples"]))
    return bad


def approximate_operator(H: Operator, U: InputSet, eps: float, mode: str = "mcshane_midpoint",
                         L: float | None = None, seed: int | None = 0, proxy_fill: float | None = None):
    """Sample ``H`` on a cover sized for eps-close approximation and build the approximant."""
    L = H.lipschitz if L is None else L
    L_eff = L * math.sqrt(U.dim) if mode == "mcshane_midpoint" else 0.0
    radius = min(approximation_radius(L, eps, L_eff), 0.45)
    cover = sampling_cover(U, radius, seed=seed, proxy_fill=proxy_fill)
    data = SampledData()
    for u in cover.centers:
        data.query(H, u)
    return build_interpolant(data, L, mode), radius, data


def run_approx(H: Operator, U: InputSet, eps_list, mode: str = "mcshane_midpoint", seed: int | None = 0,
               L: float | None = None, proxy_fill: float = 0.02):
    rows = []
    proxy = U.proxy_grid(proxy_fill, seed=seed)
    for eps in sorted(eps_list):
        H1, radius, data = approximate_operator(H, U, eps, mode, L=L, seed=seed)
        lo, up = operator_distance(H, H1, U, proxy=proxy)
        rows.append(dict(eps=eps, radius=radius, samples=data.budget_used, dist_lower=lo, dist_upper=up))
    return rows


def check_approx(rows) -> list[str]:
    bad = []
    for r in rows:
        lo, up, eps = float(r["dist_lower"]), float(r["dist_upper"]), float(r["eps"])
        if not lo <= up:
            bad.append(f"distance bracket inverted: {r}")
        if up > eps:
            bad.append(f"approximation misses its tolerance: {r}")
    return bad


def run_adversary(estimator_cfg: dict, U: InputSet, L: float, eps: float, seed: int | None = 0,
                  proxy_fill: float = 0.02, packing_fill: float | None = None) -> dict:
    est = estimator_from_config(estimator_cfg)
    rep = indistinguishability_experiment(est, U, L, eps, seed=seed, proxy_fill=proxy_fill)
    out = rep.to_dict()
    delta = eps / L
    if 0 < delta < 0.5:
        out["packing_bound"], _ = packing_lower_bound(U, delta, proxy_fill=packing_fill, seed=seed)
    else:
        out["packing_bound"] = 1
    out["estimator"] = dict(estimator_cfg)
    return out


def check_adversary(report: dict) -> list[str]:
    bad = []
    if not report["identical"]:
        bad.append("replay differs from the original run")
    if float(report["forced_error"]) < float(report["adversary_gain"]) / 2 - 1e-12:
        bad.append("forced error below half the adversary gain")
    if int(report["samples"]) < int(report["packing_bound"]) and not float(report["adversary_gain"]) > float(report["eps"]):
        bad.append("budget below the packing bound but the adversary gain does not exceed eps")
    return bad
