"""Signals as coefficient vectors and the admissible input sets they live in.

A signal in an ``n``-dimensional subspace of L2 is stored as its ``n`` coefficients
with respect to a fixed orthonormal basis, so the L2 norm is the Euclidean norm of
the coefficient vector. Batches of signals are 2-D arrays with one signal per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ._rng import make_rng
from .errors import CapExceededError
from .limits import LIMITS

MC_SAMPLES = 400_000

_CONTAINS_TOL = 1e-12


@dataclass(frozen=True)
class SignalSpace:
    dim: int
    basis_label: str = "orthonormal"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


def norm(u) -> float | np.ndarray:
    """L2 norm of a signal, or of every row of a batch."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        return float(np.linalg.norm(u))
    return np.linalg.norm(u, axis=-1)


def unit_ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball in R^n."""
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


class InputSet:
    """Base class for closed, bounded admissible input sets excluding the origin."""

    dim: int

    @property
    def space(self) -> SignalSpace:
        return SignalSpace(self.dim)

    # -- geometry supplied by subclasses ------------------------------------
    @property
    def min_norm(self) -> float:
        raise NotImplementedError

    @property
    def radius_sup(self) -> float:
        raise NotImplementedError

    def _contains(self, X: np.ndarray, tol: float) -> np.ndarray:
        raise NotImplementedError

    def project(self, X) -> np.ndarray:
        """Nearest point of the set for each row of ``X``."""
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """``k`` points drawn uniformly (w.r.t. Lebesgue measure) from the set."""
        raise NotImplementedError

    def volume(self, seed: int | None = 0) -> tuple[float, float]:
        """Lebesgue volume and its standard error (0 for closed forms)."""
        raise NotImplementedError

    def components_1d(self) -> list[tuple[float, float]]:
        raise NotImplementedError

    def min_norm_point(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_symmetric(self) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    # -- shared behaviour ----------------------------------------------------
    def _check_dims(self, X: np.ndarray) -> None:
        if X.shape[-1] != self.dim:
            raise ValueError(f"signal has {X.shape[-1]} coefficients, input set has dim {self.dim}")

    def contains(self, u, tol: float = _CONTAINS_TOL):
        X = np.asarray(u, dtype=float)
        self._check_dims(X)
        out = self._contains(np.atleast_2d(X), tol)
        return bool(out[0]) if X.ndim == 1 else out

    def distance(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X - self.project(X), axis=1)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius_sup

    def proxy_grid(self, fill: float, seed: int | None = None, cap: int | None = None):
        """Finite subset of the set whose dispersion is at most ``fill``.

        Returns ``(points, dispersion)``: every member of the set is within norm
        distance ``dispersion`` of some row of ``points``. See :func:`proxy_grid`.
        """
        return proxy_grid(self, fill, seed=seed, cap=cap)


@dataclass(frozen=True)
class Annulus(InputSet):
    """``{u : r_min <= ||u|| <= r_max}``."""

    dim: int
    r_min: float
    r_max: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (0 < self.r_min < self.r_max < math.inf):
            raise ValueError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")

    @property
    def min_norm(self) -> float:
        return float(self.r_min)

    @property
    def radius_sup(self) -> float:
        return float(self.r_max)

    @property
    def is_symmetric(self) -> bool:
        return True

    def _contains(self, X, tol):
        r = np.linalg.norm(X, axis=1)
        scale = tol * max(1.0, self.r_max)
        return (r >= self.r_min - scale) & (r <= self.r_max + scale)

    def project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = np.linalg.norm(X, axis=1)
        out = X.copy()
        inner = r < self.r_min
        outer = r > self.r_max
        zero = r == 0
        safe = np.where(zero, 1.0, r)
        out[inner] = X[inner] * (self.r_min / safe[inner])[:, None]
        out[outer] = X[outer] * (self.r_max / safe[outer])[:, None]
        if zero.any():
            out[zero] = 0.0
            out[zero, 0] = self.r_min
        return out

    def bounding_box(self):
        return np.full(self.dim, -self.r_max), np.full(self.dim, self.r_max)

    def sample(self, rng, k):
        g = rng.standard_normal((k, self.dim))
        g /= np.linalg.norm(g, axis=1)[:, None]
        n = self.dim
        t = rng.random(k)
        r = (self.r_min**n + t * (self.r_max**n - self.r_min**n)) ** (1.0 / n)
        return g * r[:, None]

    def volume(self, seed=0):
        n = self.dim
        return unit_ball_volume(n) * (self.r_max**n - self.r_min**n), 0.0

    def components_1d(self):
        if self.dim != 1:
            raise ValueError("components_1d is only defined for dim 1")
        return [(-self.r_max, -self.r_min), (self.r_min, self.r_max)]

    def min_norm_point(self):
        u = np.zeros(self.dim)
        u[0] = self.r_min
        return u

    def to_dict(self):
        return {"dim": self.dim, "shape": "annulus", "r_min": self.r_min, "r_max": self.r_max}


@dataclass(frozen=True)
class Box(InputSet):
    """Axis-aligned box with a norm floor: ``lo <= u <= hi`` and ``||u|| >= min_norm``.

    The floor sphere must either lie inside the box or miss it entirely, which
    keeps the nearest-point projection exact.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    floor: float

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lo and hi must be equal-length vectors")
        if not np.all(lo < hi):
            raise ValueError("need lo < hi componentwise")
        if not self.floor > 0:
            raise ValueError("min_norm must be positive")
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))
        if not (self._floor_inside or self._floor_disjoint):
            raise ValueError("the min_norm sphere must lie inside the box or miss it entirely")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def _lo(self):
        return np.asarray(self.lo)

    @property
    def _hi(self):
        return np.asarray(self.hi)

    @property
    def _floor_inside(self) -> bool:
        return bool(np.all(self._lo <= -self.floor) and np.all(self._hi >= self.floor))

    @property
    def _floor_disjoint(self) -> bool:
        return float(np.linalg.norm(np.clip(0.0, self._lo, self._hi))) >= self.floor

    @property
    def min_norm(self) -> float:
        if self._floor_inside:
            return float(self.floor)
        return float(np.linalg.norm(np.clip(0.0, self._lo, self._hi)))

    @property
    def diameter(self) -> float:
        # the floor ball never touches the corners, so the diagonal is attained
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    @property
    def radius_sup(self) -> float:
        return float(np.sqrt(np.sum(np.maximum(self._lo**2, self._hi**2))))

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self._lo, -self._hi))

    def _contains(self, X, tol):
        scale = tol * max(1.0, self.radius_sup)
        inside = np.all((X >= self._lo - scale) & (X <= self._hi + scale), axis=1)
        return inside & (np.linalg.norm(X, axis=1) >= self.floor - scale)

    def project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.clip(X, self._lo, self._hi)
        r = np.linalg.norm(out, axis=1)
        low = r < self.floor
        if low.any():
            # only reachable when the floor sphere lies inside the box
            zero = low & (r == 0)
            push = low & ~zero
            out[push] = out[push] * (self.floor / r[push])[:, None]
            out[zero] = 0.0
            out[zero, 0] = self.floor
        return out

    def bounding_box(self):
        return self._lo.copy(), self._hi.copy()

    def sample(self, rng, k):
        out = np.empty((0, self.dim))
        while out.shape[0] < k:
            X = rng.uniform(self._lo, self._hi, size=(max(2 * k, 64), self.dim))
            X = X[np.linalg.norm(X, axis=1) >= self.floor]
            out = np.vstack([out, X])
        return out[:k]

    def volume(self, seed=0):
        """Monte Carlo volume (hit-or-miss inside the box)."""
        rng = make_rng(seed, "box-volume")
        box_vol = float(np.prod(self._hi - self._lo))
        hits = 0
        done = 0
        chunk = 100_000
        while done < MC_SAMPLES:
            m = min(chunk, MC_SAMPLES - done)
            X = rng.uniform(self._lo, self._hi, size=(m, self.dim))
            hits += int(np.count_nonzero(np.linalg.norm(X, axis=1) >= self.floor))
            done += m
        p = hits / done
        return box_vol * p, box_vol * math.sqrt(p * (1.0 - p) / done)

    def components_1d(self):
        if self.dim != 1:
            raise ValueError("components_1d is only defined for dim 1")
        lo, hi, m = self.lo[0], self.hi[0], self.floor
        if self._floor_disjoint:
            return [(lo, hi)]
        return [(lo, -m), (m, hi)]

    def min_norm_point(self):
        if self._floor_inside:
            u = np.zeros(self.dim)
            u[0] = self.floor
            return u
        return np.clip(np.zeros(self.dim), self._lo, self._hi)

    def to_dict(self):
        return {"dim": self.dim, "shape": "box", "lo": list(self.lo), "hi": list(self.hi), "min_norm": self.floor}


def input_set_from_dict(d: dict[str, Any]) -> InputSet:
    shape = d.get("shape")
    if shape == "annulus":
        return Annulus(int(d["dim"]), float(d["r_min"]), float(d["r_max"]))
    if shape == "box":
        U = Box(tuple(d["lo"]), tuple(d["hi"]), float(d["min_norm"]))
        if "dim" in d and int(d["dim"]) != U.dim:
            raise ValueError("dim does not match the length of lo/hi")
        return U
    raise ValueError(f"unknown input-set shape {shape!r}")


def _lattice_axes(U: InputSet, h: float, offset: np.ndarray) -> list[np.ndarray]:
    lo, hi = U.bounding_box()
    axes = []
    for k in range(U.dim):
        a = math.floor((lo[k] - h - offset[k]) / h)
        b = math.ceil((hi[k] + h - offset[k]) / h)
        axes.append(offset[k] + h * np.arange(a, b + 1))
    return axes


def _dispersion_1d(U: InputSet, P: np.ndarray) -> float:
    x = np.sort(P[:, 0])
    worst = 0.0
    for a, b in U.components_1d():
        seg = x[(x >= a - 1e-12) & (x <= b + 1e-12)]
        if seg.size == 0:
            return math.inf
        gaps = np.diff(seg)
        worst = max(worst, seg[0] - a, b - seg[-1], float(gaps.max()) / 2 if gaps.size else 0.0)
    return float(worst)


def proxy_grid(U: InputSet, fill: float, seed: int | None = None, cap: int | None = None):
    """Lattice points inside ``U`` plus projections of nearby outside lattice points.

    The lattice has spacing ``fill / sqrt(n)``, shifted by a seeded random offset
    (no shift when ``seed`` is None). For ``x`` in ``U`` with nearest lattice point
    ``g`` (``||x - g|| <= r``, half the cell diagonal): either ``g`` is kept, or its
    projection ``p`` satisfies ``||x - p|| <= r + ||g - p||``, so the dispersion
    ``r + max ||g - p||`` never exceeds ``2 r = fill``. In 1-D the dispersion is
    computed exactly from the gaps.
    """
    if not fill > 0:
        raise ValueError("fill must be positive")
    n = U.dim
    h = fill / math.sqrt(n)
    if seed is None:
        offset = np.zeros(n)
    else:
        offset = make_rng(seed, "proxy-offset").uniform(0.0, h, size=n)
    axes = _lattice_axes(U, h, offset)
    total = math.prod(len(a) for a in axes)
    if total > LIMITS.lattice:
        raise CapExceededError(f"proxy lattice would have {total} points (cap {LIMITS.lattice})")
    half_diag = 0.5 * h * math.sqrt(n)

    inside_parts, proj_parts = [], []
    t_max = 0.0
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 else None
    for x0 in axes[0]:
        if rest is None:
            G = np.array([[x0]])
        else:
            G = np.hstack([np.full((rest.shape[0], 1), x0), rest])
        mask = U._contains(G, 0.0)
        inside_parts.append(G[mask])
        out = G[~mask]
        if out.size:
            Q = U.project(out)
            gap = np.linalg.norm(out - Q, axis=1)
            near = gap <= half_diag * (1 + 1e-9)
            if near.any():
                proj_parts.append(Q[near])
                t_max = max(t_max, float(gap[near].max()))
    parts = inside_parts + proj_parts
    if n == 1:
        ends = np.array([[v] for ab in U.components_1d() for v in ab])
        parts.append(ends)
    P = np.vstack([p for p in parts if p.size] or [np.empty((0, n))])
    if P.shape[0] == 0:
        P = U.min_norm_point()[None, :]
    _, first = np.unique(P, axis=0, return_index=True)
    P = P[np.sort(first)]
    cap = LIMITS.proxy if cap is None else cap
    if P.shape[0] > cap:
        raise CapExceededError(f"proxy would have {P.shape[0]} points (cap {cap})")
    if n == 1:
        disp = _dispersion_1d(U, P)
    else:
        disp = half_diag + t_max
    return P, float(disp)
