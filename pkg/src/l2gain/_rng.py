"""Named random streams derived from a single integer seed."""

from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int | None, label: str) -> np.random.Generator:
    """Return a generator for ``label`` that is independent of every other label.

    The same ``(seed, label)`` pair always yields the same stream, regardless of
    which other streams were created before it.
    """
    key = zlib.crc32(label.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=0 if seed is None else int(seed), spawn_key=(key,))
    return np.random.default_rng(ss)
