"""Lipschitz-consistent approximants built from sampled data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InconsistentDataError
from .gain import SampledData
from .signals import InputSet

Mode = Literal["mcshane_midpoint", "nearest_sample"]

_CHUNK = 2048


def _pairwise(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=-1)


@dataclass
class Interpolant:
    """Approximant of an operator from samples ``(u_i, y_i)``.

    ``mcshane_midpoint`` averages the upper and lower McShane envelopes in each
    output coordinate, so every coordinate is L-Lipschitz and the vector map is
    ``L * sqrt(m)``-Lipschitz for ``m`` outputs. ``nearest_sample`` returns the
    output of the closest sample and is not continuous.
    """

    data: SampledData
    L: float
    mode: Mode = "mcshane_midpoint"

    def __post_init__(self):
        self._U = self.data.U()
        self._Y = self.data.Y()

    @property
    def effective_lipschitz(self) -> float:
        if self.mode == "nearest_sample":
            return math.inf
        return self.L * math.sqrt(self._Y.shape[1])

    lipschitz = effective_lipschitz

    def nearest(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Index of the nearest sample (lowest index on ties) and its distance."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.empty(X.shape[0], dtype=np.intp)
        dist = np.empty(X.shape[0])
        for s in range(0, X.shape[0], _CHUNK):
            D = _pairwise(X[s:s + _CHUNK], self._U)
            j = np.argmin(D, axis=1)
            idx[s:s + _CHUNK] = j
            dist[s:s + _CHUNK] = D[np.arange(D.shape[0]), j]
        return idx, dist

    def __call__(self, u) -> np.ndarray:
        X = np.asarray(u, dtype=float)
        B = np.atleast_2d(X)
        if self.mode == "nearest_sample":
            out = self._Y[self.nearest(B)[0]]
        else:
            out = np.empty((B.shape[0], self._Y.shape[1]))
            for s in range(0, B.shape[0], _CHUNK):
                LD = self.L * _pairwise(B[s:s + _CHUNK], self._U)
                for k in range(self._Y.shape[1]):
                    upper = np.min(self._Y[:, k][None, :] + LD, axis=1)
                    lower = np.max(self._Y[:, k][None, :] - LD, axis=1)
                    out[s:s + _CHUNK, k] = 0.5 * (upper + lower)
        return out[0] if X.ndim == 1 else out


def check_consistency(data: SampledData, L: float) -> None:
    """Raise if some output coordinate changes faster than ``L`` between two samples."""
    U, Y = data.U(), data.Y()
    for s in range(0, U.shape[0], _CHUNK):
        D = _pairwise(U[s:s + _CHUNK], U)
        allowed = L * (1 + 1e-9) * D + 1e-12
        for k in range(Y.shape[1]):
            diff = np.abs(Y[s:s + _CHUNK, k][:, None] - Y[:, k][None, :])
            if np.any(diff > allowed):
                i, j = np.unravel_index(np.argmax(diff - allowed), diff.shape)
                raise InconsistentDataError(
                    f"samples {s + i} and {j} violate the Lipschitz bound {L} in output {k}"
                )


def build_interpolant(data: SampledData, L: float, mode: Mode = "mcshane_midpoint") -> Interpolant:
    if data.budget_used == 0:
        raise ValueError("need at least one sample")
    if mode not in ("mcshane_midpoint", "nearest_sample"):
        raise ValueError(f"unknown interpolation mode {mode!r}")
    if mode == "mcshane_midpoint":
        check_consistency(data, L)
    return Interpolant(data, float(L), mode)


def operator_distance(H, H1: Interpolant, U: InputSet, proxy_fill: float = 0.02, seed: int | None = None,
                      proxy: tuple[np.ndarray, float] | None = None):
    """Bracket ``max ||H(u) - H1(u)|| / ||u||`` over ``U``.

    For the McShane approximant, the ratio moves by at most
    ``dispersion * (L_H + L_H1 + lower) / min_norm`` off the proxy. The nearest
    sample approximant is bounded directly through ``H``'s Lipschitz constant
    and the distance to the nearest sample.
    """
    P, disp = proxy if proxy is not None else U.proxy_grid(proxy_fill, seed=seed)
    m = U.min_norm
    lower = 0.0
    direct = 0.0
    for s in range(0, P.shape[0], 8192):
        X = P[s:s + 8192]
        nx = np.linalg.norm(X, axis=1)
        err = np.linalg.norm(H(X) - H1(X), axis=1) / nx
        lower = max(lower, float(err.max()))
        if H1.mode == "nearest_sample":
            _, dnn = H1.nearest(X)
            bound = H.lipschitz * (dnn + disp) / np.maximum(nx - disp, m)
            direct = max(direct, float(bound.max()))
    if H1.mode == "nearest_sample":
        upper = max(lower, direct)
    else:
        upper = lower + disp * (H.lipschitz + H1.effective_lipschitz + lower) / m
    return lower, upper


def approximation_radius(L: float, eps: float, L_eff: float | None = None) -> float:
    """Projective cover radius ``eps / (L + L_eff + eps)`` for eps-close approximation.

    At this radius ``(L + L_eff) * eta / (1 - eta) = eps``.
    """
    if L_eff is None:
        L_eff = L
    if not (L >= 0 and L_eff >= 0 and eps > 0):
        raise ValueError("need L, L_eff >= 0 and eps > 0")
    return eps / (L + L_eff + eps)
