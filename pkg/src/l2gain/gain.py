"""Certified L2-gain estimation from finitely many input/output samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .covering import Cover, greedy_cover, greedy_radius_for
from .operators import true_gain_oracle
from .signals import InputSet

Oracle = Callable[[np.ndarray], np.ndarray]


@dataclass
class SampledData:
    inputs: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.inputs, self.outputs))

    @property
    def budget_used(self) -> int:
        return len(self.inputs)

    def U(self) -> np.ndarray:
        return np.vstack(self.inputs)

    def Y(self) -> np.ndarray:
        return np.vstack(self.outputs)

    def query(self, H: Oracle, u: np.ndarray) -> np.ndarray:
        """Sample ``H`` at ``u`` and record the pair."""
        u = np.array(u, dtype=float)
        y = np.array(H(u), dtype=float)
        self.inputs.append(u)
        self.outputs.append(y)
        return y


@dataclass
class GainEstimate:
    gamma_low: float
    gamma_high: float
    eta: float
    per_cell: list[tuple[int, float]]
    gap_bound: float
    cover: Cover | None = None

    @property
    def gap(self) -> float:
        return self.gamma_high - self.gamma_low


def per_cell_gain_bound(u, y, delta: float, L: float) -> float:
    """Upper bound on ``||H(u')|| / ||u'||`` over the norm ball of radius ``delta`` at ``u``.

    Uses ``||H(u')|| <= ||H(u)|| + L delta`` and ``||u'|| >= ||u|| - delta``.
    """
    nu = float(np.linalg.norm(u))
    if not 0 <= delta < nu:
        raise ValueError(f"need 0 <= delta < ||u|| = {nu}, got {delta}")
    ny = float(np.linalg.norm(y))
    return (nu / (nu - delta)) * (L * delta + ny) / nu


def gap_bound_for(eta: float, gamma_low: float, L: float) -> float:
    """Worst-case ``gamma_high - gamma_low`` for cells of projective radius ``eta``."""
    return eta * (L + gamma_low) / (1.0 - 2.0 * eta)


def sampling_cover(
    U: InputSet,
    eta: float,
    seed: int | None = None,
    proxy_fill: float | None = None,
    cap: int | None = None,
) -> Cover:
    """Projective cover with centers in ``U`` whose certified radius is exactly ``eta``.

    The greedy proxy cover is run at a slightly smaller radius so that the proxy
    dispersion is absorbed.
    """
    if proxy_fill is None:
        proxy_fill = eta * U.min_norm / 4
    proxy = U.proxy_grid(proxy_fill, seed=seed)
    r = greedy_radius_for(U, eta, "projective", proxy[1])
    cover = greedy_cover(U, r, "projective", proxy=proxy, cap=cap)
    cover.certified_radius = min(cover.certified_radius, eta)
    return cover


def estimate_gain(
    H: Oracle,
    U: InputSet,
    L: float,
    eta: float,
    seed: int | None = None,
    proxy_fill: float | None = None,
    cap: int | None = None,
    cover: Cover | None = None,
):
    """Two-sided certified bounds on the L2-gain of an L-Lipschitz black box.

    Samples ``H`` at the centers of a projective cover of certified radius
    ``eta``; each cell is a norm ball of radius ``eta / (1 - eta) * ||u_i||``
    around its center. Returns ``(GainEstimate, SampledData)``.
    """
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    if cover is None:
        cover = sampling_cover(U, eta, seed=seed, proxy_fill=proxy_fill, cap=cap)
    eta_c = cover.certified_radius
    t = eta_c / (1.0 - eta_c)
    data = SampledData()
    per_cell = []
    gamma_low = 0.0
    gamma_high = 0.0
    for i, u in enumerate(cover.centers):
        y = data.query(H, u)
        nu = float(np.linalg.norm(u))
        gamma_low = max(gamma_low, float(np.linalg.norm(y)) / nu)
        b = per_cell_gain_bound(u, y, t * nu, L)
        per_cell.append((i, b))
        gamma_high = max(gamma_high, b)
    est = GainEstimate(
        gamma_low=gamma_low,
        gamma_high=gamma_high,
        eta=eta_c,
        per_cell=per_cell,
        gap_bound=gap_bound_for(eta_c, gamma_low, L),
        cover=cover,
    )
    return est, data


def calibrate_eta(
    H: Oracle,
    U: InputSet,
    L: float,
    eps: float,
    seed: int | None = None,
    max_iter: int = 8,
):
    """Largest ``eta`` (found by fixed-point iteration) whose a-posteriori gap bound is at most ``eps``.

    The gap bound is at most ``eps`` exactly when ``eta <= eps / (L + gamma_low + 2 eps)``;
    each run refines ``gamma_low`` and hence the next ``eta``. Returns
    ``(GainEstimate, SampledData)`` of the first passing run.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    eta = min(0.45, eps / (L + 2 * eps))
    for _ in range(max_iter):
        est, data = estimate_gain(H, U, L, eta, seed=seed)
        if est.gap_bound <= eps:
            return est, data
        eta = min(0.99 * eta, eps / (L + est.gamma_low + 2 * eps))
    raise ValueError(f"no eta reached gap {eps} within {max_iter} runs")


def two_sample_gain_estimate(H: Oracle, U: InputSet, L: float) -> tuple[float, SampledData]:
    """Gain overestimate from ``H(u)``, ``H(-u)`` at a minimum-norm input ``u``.

    Every admissible input lies within ``sqrt(2) ||u'||`` of ``u`` or ``-u``, so
    the result exceeds the true gain by at most ``sqrt(2) L``.
    """
    if not U.is_symmetric:
        raise ValueError("two-sample estimate needs a symmetric input set")
    u = U.min_norm_point()
    data = SampledData()
    y_pos = data.query(H, u)
    y_neg = data.query(H, -u)
    nu = float(np.linalg.norm(u))
    ratio = max(float(np.linalg.norm(y_pos)), float(np.linalg.norm(y_neg))) / nu
    return ratio + math.sqrt(2.0) * L, data


def gain_via_approximant(H1, U: InputSet, eps: float, proxy_fill: float = 0.02, seed: int | None = None) -> float:
    """Gain estimate ``||H1|| + eps / 2`` from an ``eps/2``-close approximant ``H1``.

    ``||H1||`` is replaced by its certified proxy upper bound, which needs a
    finite Lipschitz constant for ``H1``.
    """
    L1 = H1.effective_lipschitz
    if not math.isfinite(L1):
        raise ValueError("approximant has no finite Lipschitz constant")
    bracket = true_gain_oracle(H1, U, proxy_fill=proxy_fill, seed=seed, lipschitz=L1)
    return bracket.upper + eps / 2.0
