"""Deterministic RNG stream derivation.

All randomness flows from one master seed. Purpose labels are hashed to
stable integers and combined with the master seed in a SeedSequence, so
streams are independent, reproducible across runs and platforms, and
insensitive to the order in which they are created.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def substream(master_seed: int, label: str, *indices: int) -> np.random.Generator:
    """Named, optionally indexed child generator of the master seed."""
    if master_seed < 0:
        raise ValueError("master seed must be >= 0")
    entropy = [int(master_seed), _label_key(label),
               *[int(i) & 0xFFFFFFFFFFFFFFFF for i in indices]]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
