"""Executable version of the indistinguishability argument behind the sample lower bound.

Run an estimator on the zero operator, build a bump operator that vanishes on
every input it queried, replay the estimator on the bump and compare. Both runs
see identical data, so the estimate is identical, while the bump's gain is large
wherever the queries left territory uncovered.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .covering import greedy_cover
from .errors import NondeterminismError
from .gain import estimate_gain
from .operators import Bump, Zero, true_gain_oracle
from .projective import proj_dist
from .signals import InputSet

Estimator = Callable[[Callable[[np.ndarray], np.ndarray], InputSet, float], float]


def slack_function(u, anchors) -> float | np.ndarray:
    """Distance from ``u`` (or each row of a batch) to the nearest anchor."""
    u = np.asarray(u, dtype=float)
    A = np.atleast_2d(np.asarray(anchors, dtype=float))
    if A.shape[0] == 0:
        raise ValueError("anchors must be nonempty")
    X = np.atleast_2d(u)
    d = np.linalg.norm(X[:, None, :] - A[None, :, :], axis=-1).min(axis=1)
    return float(d[0]) if u.ndim == 1 else d


def build_adversary(anchors, L: float, f=None) -> Bump:
    return Bump(anchors, L, f)


class Recorder:
    """Wraps an operator and keeps the ordered transcript of queries."""

    def __init__(self, H):
        self.H = H
        self.inputs: list[np.ndarray] = []
        self.outputs: list[np.ndarray] = []

    def __call__(self, u):
        u = np.array(u, dtype=float)
        y = np.array(self.H(u), dtype=float)
        self.inputs.append(u)
        self.outputs.append(y)
        return y

    def digest(self) -> str:
        h = hashlib.sha256()
        for u, y in zip(self.inputs, self.outputs):
            h.update(np.ascontiguousarray(u, dtype="<f8").tobytes())
            h.update(np.ascontiguousarray(y + 0.0, dtype="<f8").tobytes())
        return h.hexdigest()

    def same_as(self, other: "Recorder") -> bool:
        if len(self.inputs) != len(other.inputs):
            return False
        return all(
            np.array_equal(a, b) and np.array_equal(y, z)
            for a, b, y, z in zip(self.inputs, other.inputs, self.outputs, other.outputs)
        )


def cover_estimator(eta: float, seed: int | None = 0, proxy_fill: float | None = None) -> Estimator:
    """Estimator running :func:`estimate_gain` with fixed ``eta`` and reporting ``gamma_high``."""

    def run(oracle, U, L):
        est, _ = estimate_gain(oracle, U, L, eta, seed=seed, proxy_fill=proxy_fill)
        return est.gamma_high

    run.config = {"kind": "cover", "eta": eta, "seed": seed, "proxy_fill": proxy_fill}
    return run


def farthest_inputs(U: InputSet, budget: int, proxy: tuple[np.ndarray, float]) -> np.ndarray:
    """First ``budget`` points of a projective farthest-point ordering of the proxy."""
    P = proxy[0]
    chosen = [int(np.argmin(np.linalg.norm(P, axis=1)))]
    best = np.full(P.shape[0], np.inf)
    while len(chosen) < min(budget, P.shape[0]):
        np.minimum(best, proj_dist(P, P[chosen[-1]]), out=best)
        chosen.append(int(np.argmax(best)))
    return P[chosen]


def envelope_estimator(budget: int, proxy_fill: float = 0.05, seed: int | None = 0) -> Estimator:
    """Budgeted estimator with the tightest sound bound its data allows.

    Queries ``budget`` farthest-point inputs, then reports the proxy maximum of
    ``min_i (||y_i|| + L ||x - u_i||) / ||x||`` inflated by the proxy dispersion.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")

    def run(oracle, U, L):
        proxy = U.proxy_grid(proxy_fill, seed=seed)
        P, disp = proxy
        X = farthest_inputs(U, budget, proxy)
        Y = np.vstack([oracle(x) for x in X])
        ny = np.linalg.norm(Y, axis=1)
        gamma = 0.0
        for s in range(0, P.shape[0], 4096):
            Q = P[s:s + 4096]
            phi = np.min(ny[None, :] + L * np.linalg.norm(Q[:, None, :] - X[None, :, :], axis=-1), axis=1)
            nq = np.linalg.norm(Q, axis=1)
            gamma = max(gamma, float(np.max((phi + L * disp) / np.maximum(nq - disp, U.min_norm))))
        return gamma

    run.config = {"kind": "envelope", "budget": budget, "proxy_fill": proxy_fill, "seed": seed}
    return run


def estimator_from_config(cfg: dict) -> Estimator:
    kind = cfg.get("kind", "envelope")
    if kind == "cover":
        return cover_estimator(float(cfg["eta"]), cfg.get("seed", 0), cfg.get("proxy_fill"))
    if kind == "envelope":
        return envelope_estimator(int(cfg["budget"]), float(cfg.get("proxy_fill", 0.05)), cfg.get("seed", 0))
    raise ValueError(f"unknown estimator kind {kind!r}")


@dataclass
class AdversaryReport:
    gamma: float
    gamma_replay: float
    identical: bool
    samples: int
    adversary_gain: float
    adversary_gain_upper: float
    forced_error: float
    transcript_hash: str
    eps: float
    L: float

    def to_dict(self) -> dict:
        return asdict(self)


def _bits(x: float) -> bytes:
    return struct.pack("<d", x)


def indistinguishability_experiment(
    estimator: Estimator,
    U: InputSet,
    L: float,
    eps: float,
    seed: int | None = 0,
    proxy_fill: float = 0.02,
    f=None,
) -> AdversaryReport:
    """Run ``estimator`` on the zero operator and on the bump built from its queries.

    ``forced_error`` is ``max(gamma, gain(H1) - gamma)``, the larger of the two
    errors the single estimate must commit on ``H0`` (gain 0) or ``H1``; it is at
    least half the bump's gain. Raises NondeterminismError if the replay sees a
    different transcript or returns a different estimate.
    """
    first = Recorder(Zero())
    gamma = float(estimator(first, U, L))
    if not first.inputs:
        raise ValueError("estimator made no queries")
    H1 = build_adversary(np.vstack(first.inputs), L, f)
    second = Recorder(H1)
    gamma_replay = float(estimator(second, U, L))
    identical = first.same_as(second) and _bits(gamma) == _bits(gamma_replay)
    if not identical:
        raise NondeterminismError("estimator saw different data or returned a different estimate on replay")
    bracket = true_gain_oracle(H1, U, proxy_fill=proxy_fill, seed=seed)
    adv = bracket.lower
    return AdversaryReport(
        gamma=gamma,
        gamma_replay=gamma_replay,
        identical=identical,
        samples=len(first.inputs),
        adversary_gain=adv,
        adversary_gain_upper=bracket.upper,
        forced_error=max(gamma, adv - gamma),
        transcript_hash=first.digest(),
        eps=eps,
        L=L,
    )


def neutralizing_cover(U: InputSet, eta: float, seed: int | None = None, proxy_fill: float | None = None):
    """Projective cover whose bump adversary has gain at most ``L eta_c / (1 - eta_c)``."""
    cover = greedy_cover(U, eta, "projective", proxy_fill=proxy_fill, seed=seed)
    bound = cover.certified_radius / (1 - cover.certified_radius)
    if not math.isfinite(bound):
        raise ValueError("certified radius too large")
    return cover, bound
