"""Keyed random substreams so any replicate can be re-run on its own."""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    return zlib.crc32(str(part).encode())


def substream(seed: int, *keys) -> np.random.Generator:
    """Generator determined only by ``seed`` and the key path.

    ``substream(7, "perm", 3)`` is the same stream no matter how many other
    streams were drawn before it or in which process.
    """
    return np.random.default_rng(np.random.SeedSequence([_key(seed)] + [_key(k) for k in keys]))


def subseed(seed: int, *keys) -> int:
    """Integer seed derived from a substream, for APIs that take seeds."""
    return int(substream(seed, *keys).integers(0, 2**63 - 1))
