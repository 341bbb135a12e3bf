"""Size caps for desk-scale runs; override with :func:`limits`."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, fields


@dataclass
class Limits:
    proxy: int = 200_000
    lattice: int = 4_000_000
    cover: int = 10_000
    exact: int = 25


LIMITS = Limits()


@contextmanager
def limits(**overrides):
    """Temporarily replace caps, e.g. ``with limits(proxy=2_000_000): ...``."""
    names = {f.name for f in fields(Limits)}
    unknown = set(overrides) - names
    if unknown:
        raise TypeError(f"unknown limits: {sorted(unknown)}")
    saved = {k: getattr(LIMITS, k) for k in overrides}
    for k, v in overrides.items():
        if v is not None:
            setattr(LIMITS, k, int(v))
    try:
        yield LIMITS
    finally:
        for k, v in saved.items():
            setattr(LIMITS, k, v)
