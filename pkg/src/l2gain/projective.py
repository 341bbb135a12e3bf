"""Projective distance ``d(x, y) = ||x - y|| / max(||x||, ||y||)`` on nonzero signals."""

from __future__ import annotations

import numpy as np


def proj_dist(x, y):
    """Projective distance between signals, broadcasting over leading axes.

    Raises ValueError if any argument is the zero signal, where the distance is
    undefined.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = np.linalg.norm(x, axis=-1)
    ny = np.linalg.norm(y, axis=-1)
    if np.any(nx == 0) or np.any(ny == 0):
        raise ValueError("projective distance is undefined for the zero signal")
    d = np.linalg.norm(x - y, axis=-1) / np.maximum(nx, ny)
    return float(d) if np.ndim(d) == 0 else d


def separation(x, y):
    """``||x - y|| / (||x|| + ||y||)``, the pairwise spread used for packings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.linalg.norm(x - y, axis=-1) / (np.linalg.norm(x, axis=-1) + np.linalg.norm(y, axis=-1))
    return float(d) if np.ndim(d) == 0 else d


def metric_ball_to_norm_ball(eps: float) -> float:
    """Factor ``eps / (1 - eps)``: ``d(x, y) <= eps`` implies ``||x - y|| <= factor * ||x||``."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return eps / (1.0 - eps)


def separation_to_metric(eta: float) -> float:
    """``eta / (1 + eta)``: ``||x - y|| > eta ||x||`` implies ``d(x, y) > eta / (1 + eta)``."""
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    return eta / (1.0 + eta)
