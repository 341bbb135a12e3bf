"""Black-box Lipschitz operators with known constants, and oracles for their gains."""

from __future__ import annotations

import threading
from typing import Any, NamedTuple

import numpy as np

from ._rng import make_rng
from .signals import Annulus, InputSet

__all__ = [
    "Operator",
    "Zero",
    "Constant",
    "Linear",
    "Saturation",
    "Bump",
    "GainBracket",
    "operator_from_dict",
    "sigma_max_power",
    "true_gain_oracle",
    "empirical_lipschitz",
]


class Operator:
    """An operator on coefficient vectors. Calling it counts as one query per signal."""

    kind = "abstract"
    lipschitz: float = 0.0

    def __init__(self):
        self._lock = threading.Lock()
        self._queries = 0

    @property
    def query_count(self) -> int:
        return self._queries

    def reset_count(self) -> None:
        with self._lock:
            self._queries = 0

    def _apply(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, u) -> np.ndarray:
        """``H(u)`` for one signal or a batch (one signal per row)."""
        X = np.asarray(u, dtype=float)
        B = np.atleast_2d(X)
        if np.any(np.all(B == 0, axis=1)):
            raise ValueError("operators are evaluated on nonzero inputs only")
        with self._lock:
            self._queries += B.shape[0]
        Y = self._apply(B) + 0.0
        return Y[0] if X.ndim == 1 else Y

    __call__ = evaluate

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


class Zero(Operator):
    kind = "zero"
    lipschitz = 0.0

    def _apply(self, X):
        return np.zeros_like(X)

    def to_dict(self):
        return {"kind": "zero"}


class Constant(Operator):
    kind = "constant"
    lipschitz = 0.0

    def __init__(self, c):
        super().__init__()
        self.c = np.asarray(c, dtype=float)

    def _apply(self, X):
        return np.broadcast_to(self.c, (X.shape[0], self.c.size)).copy()

    def to_dict(self):
        return {"kind": "constant", "c": self.c.tolist()}


class Linear(Operator):
    kind = "linear"

    def __init__(self, A):
        super().__init__()
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.lipschitz = sigma_max_power(self.A)

    def _apply(self, X):
        return X @ self.A.T

    def to_dict(self):
        return {"kind": "linear", "A": self.A.tolist()}


class Saturation(Operator):
    """Componentwise ``s * tanh(u / s)`` in coefficient space."""

    kind = "saturation"
    lipschitz = 1.0

    def __init__(self, s: float = 1.0):
        super().__init__()
        if not s > 0:
            raise ValueError("saturation level must be positive")
        self.s = float(s)

    def _apply(self, X):
        return self.s * np.tanh(X / self.s)

    def to_dict(self):
        return {"kind": "saturation", "s": self.s}


class Bump(Operator):
    """``u -> L * min_i ||u - a_i|| * f``; vanishes on the anchors, L-Lipschitz."""

    kind = "bump"

    def __init__(self, anchors, L: float, f=None):
        super().__init__()
        self.anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        if self.anchors.shape[0] == 0:
            raise ValueError("bump needs at least one anchor")
        n = self.anchors.shape[1]
        if f is None:
            f = np.zeros(n)
            f[0] = 1.0
        self.f = np.asarray(f, dtype=float)
        if abs(np.linalg.norm(self.f) - 1.0) > 1e-9:
            raise ValueError("bump direction f must have unit norm")
        if not L > 0:
            raise ValueError("bump Lipschitz constant must be positive")
        self.L = float(L)
        self.lipschitz = self.L

    def distance_to_anchors(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], np.inf)
        for start in range(0, self.anchors.shape[0], 512):
            A = self.anchors[start:start + 512]
            d = np.linalg.norm(X[:, None, :] - A[None, :, :], axis=-1).min(axis=1)
            np.minimum(out, d, out=out)
        return out

    def _apply(self, X):
        return self.L * self.distance_to_anchors(X)[:, None] * self.f[None, :]

    def to_dict(self):
        return {"kind": "bump", "anchors": self.anchors.tolist(), "L": self.L, "f": self.f.tolist()}


def operator_from_dict(d: dict[str, Any], dim: int | None = None) -> Operator:
    kind = d.get("kind")
    if kind == "zero":
        return Zero()
    if kind == "constant":
        return Constant(d["c"])
    if kind == "linear":
        return Linear(d["A"])
    if kind == "saturation":
        return Saturation(d.get("s", 1.0))
    if kind == "bump":
        return Bump(d["anchors"], d["L"], d.get("f"))
    raise ValueError(f"unknown operator kind {kind!r}")


def _power(M: np.ndarray, v: np.ndarray, tol: float, max_iter: int) -> float:
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(v @ M @ v)
        if abs(new - lam) <= tol * max(new, 1e-300):
            return new
        lam = new
    return lam


def sigma_max_power(A, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^T A``.

    Runs from the normalised all-ones vector and from every basis vector and
    keeps the largest result, since a single start can be orthogonal to the top
    singular vector. Each run stops when successive Rayleigh quotients agree to
    relative ``tol``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    M = A.T @ A
    n = M.shape[0]
    starts = [np.ones(n) / np.sqrt(n)] + list(np.eye(n))
    lam = max(_power(M, v, tol, max_iter) for v in starts)
    return float(np.sqrt(max(lam, 0.0)))


class GainBracket(NamedTuple):
    lower: float
    upper: float
    exact: float | None = None


def _exact_gain(H: Operator, U: InputSet) -> float | None:
    if isinstance(H, Zero):
        return 0.0
    if isinstance(H, Constant):
        return float(np.linalg.norm(H.c)) / U.min_norm
    if isinstance(H, Linear) and isinstance(U, Annulus):
        return H.lipschitz
    return None


def true_gain_oracle(
    H: Operator,
    U: InputSet,
    proxy_fill: float = 0.02,
    seed: int | None = None,
    proxy: tuple[np.ndarray, float] | None = None,
    lipschitz: float | None = None,
) -> GainBracket:
    """Bracket ``max ||H(u)|| / ||u||`` over ``U`` using a proxy grid.

    ``lower`` is attained at a proxy point. ``upper`` adds
    ``dispersion * (L + lower) / min_norm``, which bounds the ratio's growth
    between a point of ``U`` and its nearest proxy point.
    """
    P, disp = proxy if proxy is not None else U.proxy_grid(proxy_fill, seed=seed)
    L = H.lipschitz if lipschitz is None else lipschitz
    lower = 0.0
    for start in range(0, P.shape[0], 8192):
        X = P[start:start + 8192]
        r = np.linalg.norm(H(X), axis=1) / np.linalg.norm(X, axis=1)
        lower = max(lower, float(r.max()))
    upper = lower + disp * (L + lower) / U.min_norm
    return GainBracket(lower, upper, _exact_gain(H, U))


def sample_pairs(U: InputSet, pairs: int, seed: int | None, label: str = "pairs"):
    """Half independent uniform pairs, half nearby pairs, all inside ``U``."""
    rng = make_rng(seed, label)
    k_far = (pairs + 1) // 2
    X = U.sample(rng, k_far)
    Y = U.sample(rng, k_far)
    k_near = pairs - k_far
    if k_near:
        base = U.sample(rng, 2 * k_near)
        step = rng.standard_normal(base.shape)
        step *= (0.05 * U.min_norm * rng.random(base.shape[0]) / np.linalg.norm(step, axis=1))[:, None]
        near = base + step
        ok = U.contains(near) & np.any(step != 0, axis=1)
        X = np.vstack([X, base[ok][:k_near]])
        Y = np.vstack([Y, near[ok][:k_near]])
    return X, Y


def empirical_lipschitz(H: Operator, U: InputSet, pairs: int = 10_000, seed: int | None = 0) -> float:
    """Largest ``||H(u) - H(v)|| / ||u - v||`` over seeded random pairs in ``U``."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    X, Y = sample_pairs(U, pairs, seed)
    d = np.linalg.norm(X - Y, axis=1)
    keep = d > 0
    num = np.linalg.norm(H(X[keep]) - H(Y[keep]), axis=1)
    return float((num / d[keep]).max())
