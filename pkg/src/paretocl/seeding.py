"""Named random sub-streams derived from one experiment seed."""
from __future__ import annotations

import zlib

import numpy as np


def named_rng(seed: int, *names: str | int) -> np.random.Generator:
    """Generator for the sub-stream ``names`` of ``seed``.

    Each name is hashed to a stable integer, so adding a new stream never
    shifts the draws of an existing one.
    """
    key = [int(seed)]
    for n in names:
        key.append(n if isinstance(n, int) else zlib.crc32(str(n).encode()))
    return np.random.default_rng(np.random.SeedSequence(key))
