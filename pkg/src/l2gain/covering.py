"""Covers and packings of input sets in the norm and projective metrics."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.spatial import cKDTree

from .errors import CapExceededError
from .limits import LIMITS
from .projective import proj_dist, separation
from .signals import InputSet, unit_ball_volume

Metric = Literal["norm", "projective"]


@dataclass
class Cover:
    centers: np.ndarray
    radius: float
    metric: Metric
    certified: bool = False
    proxy_dispersion: float = 0.0
    certified_radius: float = field(default=math.nan)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if math.isnan(self.certified_radius):
            self.certified_radius = self.radius

    def __len__(self):
        return self.centers.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "radius": self.radius,
            "metric": self.metric,
            "certified": self.certified,
            "certified_radius": self.certified_radius,
            "proxy_dispersion": self.proxy_dispersion,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cover":
        return cls(
            centers=np.asarray(d["centers"], dtype=float),
            radius=float(d["radius"]),
            metric=d["metric"],
            certified=bool(d.get("certified", False)),
            proxy_dispersion=float(d.get("proxy_dispersion", 0.0)),
            certified_radius=float(d.get("certified_radius", d["radius"])),
        )


@dataclass(frozen=True)
class CoverBoundReport:
    lower_volume: float
    lower_packing: int
    upper_grid: int
    upper_greedy: int
    D1_hat: float
    D2_hat: float


def _dist_to_centers(points: np.ndarray, centers: np.ndarray, metric: Metric) -> np.ndarray:
    """Distance from each point to its nearest center, in the given metric."""
    if metric == "norm":
        d, _ = cKDTree(centers).query(points)
        return d
    out = np.full(points.shape[0], np.inf)
    for start in range(0, centers.shape[0], 256):
        C = centers[start:start + 256]
        out = np.minimum(out, proj_dist(points[:, None, :], C[None, :, :]).min(axis=1))
    return out


def covered_within(points, cover: Cover, radius: float | None = None) -> np.ndarray:
    """Boolean mask: which points lie within ``radius`` (default certified radius) of a center."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r = cover.certified_radius if radius is None else radius
    return _dist_to_centers(points, cover.centers, cover.metric) <= r * (1 + 1e-12)


def verify_cover(cover: Cover, U: InputSet, fill: float, seed: int | None = None) -> bool:
    """Check a cover against a fresh proxy of ``U``, including that proxy's own dispersion."""
    P, disp = U.proxy_grid(fill, seed=seed)
    if cover.metric == "norm":
        slack = disp
    else:
        slack = disp * (1 + cover.certified_radius) / U.min_norm
    d = _dist_to_centers(P, cover.centers, cover.metric)
    return bool(np.all(d <= cover.certified_radius + slack + 1e-12))


def grid_cover(U: InputSet, delta: float, cap: int | None = None) -> Cover:
    """Lattice norm cover of radius ``delta``.

    Per-axis spacing ``2 delta / sqrt(n)`` on ``[-ceil(rho), ceil(rho)]^n`` puts every
    point of the cube within ``delta`` of a lattice point; lattice points whose
    ``delta``-ball misses ``U`` are dropped.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    cap = LIMITS.cover if cap is None else cap
    n = U.dim
    s = 2.0 * delta / math.sqrt(n)
    R = math.ceil(U.radius_sup)
    K = math.ceil(2 * R / s - 1e-12)
    per_axis = K + 1
    if per_axis**n > 50 * cap:
        raise CapExceededError(f"grid lattice has {per_axis ** n} points")
    axis = -R + s * np.arange(per_axis)
    keep = []
    rest = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 else None
    for x0 in axis:
        G = np.array([[x0]]) if rest is None else np.hstack([np.full((rest.shape[0], 1), x0), rest])
        G = G[U.distance(G) <= delta * (1 + 1e-12)]
        keep.append(G)
        if sum(k.shape[0] for k in keep) > cap:
            raise CapExceededError(f"grid cover exceeds {cap} centers")
    C = np.vstack(keep)
    return Cover(C, delta, "norm", certified=True, proxy_dispersion=0.0, certified_radius=delta)


def grid_count_bound(U: InputSet, delta: float) -> int:
    """Pre-pruning lattice size ``(ceil(2 ceil(rho) / s) + 1)^n`` of :func:`grid_cover`."""
    n = U.dim
    s = 2.0 * delta / math.sqrt(n)
    return (math.ceil(2 * math.ceil(U.radius_sup) / s - 1e-12) + 1) ** n


# above this many (point, ball) incidences the set-cover greedy switches to the local rule
GLOBAL_GREEDY_PAIRS = 20_000_000
NEAR = 2.0


def _incidence(P: np.ndarray, tree: cKDTree, radius: float, metric: Metric):
    """CSR ``(indptr, indices)`` of the symmetric relation ``dist(p_i, p_j) <= radius``."""
    if metric == "norm":
        pairs = tree.query_pairs(radius * (1 + 1e-12), output_type="ndarray")
    else:
        norms = np.linalg.norm(P, axis=1)
        pairs = tree.query_pairs(radius / (1.0 - radius) * norms.max() * (1 + 1e-9), output_type="ndarray")
        keep = proj_dist(P[pairs[:, 0]], P[pairs[:, 1]]) <= radius
        pairs = pairs[keep]
    N = P.shape[0]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(N)])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(N)])
    order = np.lexsort((cols, rows))
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=N), out=indptr[1:])
    return indptr, cols[order]


def _pair_estimate(P: np.ndarray, tree: cKDTree, radius: float, metric: Metric) -> int:
    r = radius if metric == "norm" else radius / (1.0 - radius) * float(np.linalg.norm(P, axis=1).max())
    step = max(1, P.shape[0] // 2000)
    sample = P[::step]
    return int(tree.query_ball_point(sample, r, return_length=True).mean() * P.shape[0])


def _greedy_global(P: np.ndarray, tree: cKDTree, radius: float, metric: Metric, cap: int) -> np.ndarray:
    """Set-cover greedy: repeatedly take the point whose ball holds the most uncovered points.

    Lazy evaluation keeps stale counts in a heap (they only overestimate); ties go
    to the lowest index.
    """
    indptr, indices = _incidence(P, tree, radius, metric)
    covered = np.zeros(P.shape[0], dtype=bool)
    counts = np.diff(indptr)
    heap = [(-int(c), k) for k, c in enumerate(counts)]
    heapq.heapify(heap)
    chosen = []
    remaining = P.shape[0]
    while remaining:
        neg, k = heapq.heappop(heap)
        row = indices[indptr[k]:indptr[k + 1]]
        fresh = int(np.count_nonzero(~covered[row]))
        if fresh == 0:
            continue
        if heap and (-fresh, k) > heap[0]:
            heapq.heappush(heap, (-fresh, k))
            continue
        covered[row] = True
        remaining -= fresh
        chosen.append(k)
        if len(chosen) > cap:
            raise CapExceededError(f"greedy cover exceeds {cap} centers")
    return np.asarray(chosen, dtype=np.intp)


def _greedy_on_points(P: np.ndarray, radius: float, metric: Metric, cap: int, pool: int = 64,
                      strategy: str = "auto") -> np.ndarray:
    """Indices of greedily chosen centers covering every row of ``P`` within ``radius``.

    ``strategy="global"`` is set-cover greedy over all points; ``"local"`` is the
    cheaper rule below; ``"first"`` simply takes the lowest-index uncovered point
    itself; ``"auto"`` uses global whenever the ball incidence has at most
    ``GLOBAL_GREEDY_PAIRS`` entries and local otherwise.

    The local rule takes the lowest-index uncovered point ``p`` and, from up to ``pool``
    uncovered points within ``radius`` of it, picks the one whose ball holds the
    most uncovered points (ties to the lowest index). Centers are uncovered when
    chosen, so they are pairwise more than ``radius`` apart.
    """
    tree = cKDTree(P)
    if strategy == "global" or (strategy == "auto" and _pair_estimate(P, tree, radius, metric) <= GLOBAL_GREEDY_PAIRS):
        return _greedy_global(P, tree, radius, metric, cap)
    if strategy not in ("auto", "local", "first"):
        raise ValueError(f"unknown greedy strategy {strategy!r}")
    norms = np.linalg.norm(P, axis=1)
    covered = np.zeros(P.shape[0], dtype=bool)
    chosen = []
    i = 0
    N = P.shape[0]

    def reach(k: int) -> float:
        # d(p, c) <= eta implies ||p - c|| <= eta / (1 - eta) * ||c||
        return radius if metric == "norm" else radius / (1.0 - radius) * norms[k]

    def within(idx: np.ndarray, centers: np.ndarray) -> np.ndarray:
        # (len(centers), len(idx)) membership in the metric balls
        if metric == "norm":
            D = np.linalg.norm(P[idx][None, :, :] - centers[:, None, :], axis=-1)
            return D <= radius * (1 + 1e-12)
        return proj_dist(P[idx][None, :, :], centers[:, None, :]) <= radius

    def ball(k: int, r: float) -> np.ndarray:
        idx = np.asarray(tree.query_ball_point(P[k], r * (1 + 1e-9)), dtype=np.intp)
        idx.sort()
        return idx

    while True:
        while i < N and covered[i]:
            i += 1
        if i == N:
            break
        if strategy == "first":
            c = i
        else:
            near = ball(i, NEAR * reach(i))
            near = near[~covered[near]]
            cand = near[within(near, P[i][None, :])[0]]
            if cand.size > pool:
                cand = cand[np.linspace(0, cand.size - 1, pool).astype(np.intp)]
            score = within(near, P[cand]).sum(axis=1)
            c = int(cand[np.argmax(score)])
        hit = ball(c, reach(c))
        covered[hit[within(hit, P[c][None, :])[0]]] = True
        covered[c] = True
        chosen.append(c)
        if len(chosen) > cap:
            raise CapExceededError(f"greedy cover exceeds {cap} centers")
    return np.asarray(chosen, dtype=np.intp)


def certified_radius_for(U: InputSet, radius: float, metric: Metric, dispersion: float) -> float:
    """Radius at which a cover of a ``dispersion``-dense proxy covers all of ``U``."""
    if metric == "norm":
        return radius + dispersion
    return radius + dispersion * (1.0 + radius) / U.min_norm


def greedy_radius_for(U: InputSet, target: float, metric: Metric, dispersion: float) -> float:
    """Proxy cover radius whose certified radius equals ``target``."""
    if metric == "norm":
        r = target - dispersion
    else:
        q = dispersion / U.min_norm
        r = (target - q) / (1.0 + q)
    if not r > 0:
        raise ValueError(f"proxy dispersion {dispersion} is too coarse for radius {target}")
    return r


def greedy_cover(
    U: InputSet,
    radius: float,
    metric: Metric = "norm",
    proxy_fill: float | None = None,
    seed: int | None = None,
    cap: int | None = None,
    proxy: tuple[np.ndarray, float] | None = None,
    strategy: str = "auto",
) -> Cover:
    """Greedy cover of a proxy grid of ``U`` with centers drawn from the proxy.

    The returned ``certified_radius`` folds in the proxy dispersion so that the
    whole of ``U`` (not just the proxy) is covered at that radius.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if metric == "projective" and not radius < 0.5:
        raise ValueError("projective cover radius must be < 1/2")
    if proxy is None:
        if proxy_fill is None:
            proxy_fill = radius * (U.min_norm if metric == "projective" else 1.0) / 4
        proxy = U.proxy_grid(proxy_fill, seed=seed)
    P, disp = proxy
    idx = _greedy_on_points(P, radius, metric, LIMITS.cover if cap is None else cap, strategy=strategy)
    return Cover(
        P[idx],
        radius,
        metric,
        certified=True,
        proxy_dispersion=disp,
        certified_radius=certified_radius_for(U, radius, metric, disp),
    )


def _coverage_masks(points, candidates, radius, metric) -> list[int]:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if metric == "norm":
        D = np.linalg.norm(points[None, :, :] - candidates[:, None, :], axis=-1)
    else:
        D = proj_dist(points[None, :, :], candidates[:, None, :])
    inside = D <= radius * (1 + 1e-12)
    return [int(sum(1 << j for j in np.flatnonzero(row))) for row in inside]


def exact_min_cover(points, candidates, radius: float, metric: Metric = "norm"):
    """Minimum number of candidate-centered balls covering all points.

    Branch and bound over the uncovered point with the fewest covering candidates.
    Returns ``(size, witness)`` with ``witness`` the sorted candidate indices.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] > LIMITS.exact:
        raise CapExceededError(f"exact set cover limited to {LIMITS.exact} candidates")
    masks = _coverage_masks(points, candidates, radius, metric)
    n_pts = np.atleast_2d(points).shape[0]
    full = (1 << n_pts) - 1
    union = 0
    for m in masks:
        union |= m
    if union != full:
        raise ValueError("some point is not covered by any candidate")
    covering = [[c for c, m in enumerate(masks) if m >> j & 1] for j in range(n_pts)]
    best = [len(masks) + 1, None]
    max_cov = max(bin(m).count("1") for m in masks)

    def branch(covered: int, chosen: list[int]):
        if covered == full:
            if len(chosen) < best[0]:
                best[0], best[1] = len(chosen), sorted(chosen)
            return
        remaining = bin(full & ~covered).count("1")
        if len(chosen) + math.ceil(remaining / max_cov) >= best[0]:
            return
        j = min((j for j in range(n_pts) if not covered >> j & 1), key=lambda j: len(covering[j]))
        for c in sorted(covering[j], key=lambda c: -bin(masks[c] & ~covered).count("1")):
            chosen.append(c)
            branch(covered | masks[c], chosen)
            chosen.pop()

    branch(0, [])
    return best[0], best[1]


def packing_lower_bound(
    U: InputSet,
    delta: float,
    proxy_fill: float | None = None,
    seed: int | None = None,
    proxy: tuple[np.ndarray, float] | None = None,
):
    """Farthest-point packing certifying a lower bound on the projective cover index.

    Points ``v_i`` of ``U`` whose pairwise ``||v_i - v_j|| / (||v_i|| + ||v_j||)``
    all exceed ``delta / (1 - delta)`` lie in distinct metric balls of radius
    ``delta``. Returns ``(k, points)``.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    if proxy is None:
        if proxy_fill is None:
            proxy_fill = delta * U.min_norm
        proxy = U.proxy_grid(proxy_fill, seed=seed)
    P, _ = proxy
    tau = delta / (1.0 - delta)
    norms = np.linalg.norm(P, axis=1)
    chosen = [0]
    best = np.full(P.shape[0], np.inf)
    while True:
        v = P[chosen[-1]]
        s = np.linalg.norm(P - v, axis=1) / (norms + norms[chosen[-1]])
        np.minimum(best, s, out=best)
        j = int(np.argmax(best))
        if best[j] <= tau:
            break
        chosen.append(j)
    V = P[chosen]
    return len(chosen), V


def min_separation(V) -> float:
    """Smallest pairwise ``||v_i - v_j|| / (||v_i|| + ||v_j||)`` (inf for < 2 points)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] < 2:
        return math.inf
    S = separation(V[:, None, :], V[None, :, :])
    S[np.diag_indices_from(S)] = np.inf
    return float(S.min())


def volume_lower_bound(U: InputSet, delta: float, seed: int | None = 0) -> float:
    """``vol(U) / (V_n delta^n)``, a lower bound on the norm-cover index at ``delta``.

    Monte Carlo volumes are reduced by three standard errors to keep the bound
    conservative.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    vol, se = U.volume(seed)
    vol = max(0.0, vol - 3.0 * se)
    n = U.dim
    return vol / (unit_ball_volume(n) * delta**n)


def cover_index_chain(
    U: InputSet,
    eta: float,
    proxy_fill: float | None = None,
    seed: int | None = None,
    cap: int | None = None,
    check: bool = True,
):
    """Four bounds bracketing the projective cover index at ``eta``.

    Returns ``(lower, mid_lo, mid_hi, upper)``: the volume bound on the norm-cover
    index at ``eta / (1 - eta) * radius_sup``, a packing lower bound and a greedy
    upper bound on the projective cover index, and the greedy norm-cover size at
    ``eta * min_norm``. Both greedy covers share one proxy; the packing uses a
    proxy of twice the fill, which only weakens (never invalidates) its bound.
    """
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    if proxy_fill is None:
        proxy_fill = eta * U.min_norm / 2
    proxy = U.proxy_grid(proxy_fill, seed=seed)
    lower = volume_lower_bound(U, eta / (1.0 - eta) * U.radius_sup)
    mid_lo, _ = packing_lower_bound(U, eta, proxy_fill=2 * proxy_fill, seed=seed)
    mid_hi = greedy_cover(U, eta, "projective", proxy=proxy, cap=cap).size
    upper = greedy_cover(U, eta * U.min_norm, "norm", proxy=proxy, cap=cap).size
    if check and not (lower <= mid_hi and mid_lo <= upper and mid_lo <= mid_hi):
        raise AssertionError(f"cover chain violated at eta={eta}: {(lower, mid_lo, mid_hi, upper)}")
    return lower, mid_lo, mid_hi, upper


def cover_bound_report(
    U: InputSet,
    delta: float,
    proxy_fill: float | None = None,
    seed: int | None = None,
    cap: int | None = None,
) -> CoverBoundReport:
    """Norm-cover bounds at a single radius ``delta``.

    The packing bound counts points pairwise more than ``2 delta`` apart, which
    no single norm ball of radius ``delta`` can hold two of.
    """
    if proxy_fill is None:
        proxy_fill = delta / 4
    proxy = U.proxy_grid(proxy_fill, seed=seed)
    lower_volume = volume_lower_bound(U, delta)
    lower_packing = _norm_packing(proxy[0], 2 * delta)
    upper_grid = grid_cover(U, delta, cap=cap).size
    upper_greedy = greedy_cover(U, delta, "norm", proxy=proxy, cap=cap).size
    n = U.dim
    return CoverBoundReport(
        lower_volume=lower_volume,
        lower_packing=lower_packing,
        upper_grid=upper_grid,
        upper_greedy=upper_greedy,
        D1_hat=lower_volume * delta**n,
        D2_hat=min(upper_grid, upper_greedy) * delta**n,
    )


def _norm_packing(P: np.ndarray, sep: float) -> int:
    chosen = [0]
    best = np.linalg.norm(P - P[0], axis=1)
    while True:
        j = int(np.argmax(best))
        if best[j] <= sep:
            return len(chosen)
        chosen.append(j)
        np.minimum(best, np.linalg.norm(P - P[j], axis=1), out=best)
