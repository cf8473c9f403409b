"""Deterministic derivation of independent random streams."""

from __future__ import annotations

import zlib
from typing import Iterable

import numpy as np


def derive_seed(master_seed: int, labels: Iterable[int]) -> np.random.SeedSequence:
    """Mix a master seed and integer labels into a SeedSequence.

    SeedSequence hashes entropy and spawn key together, so distinct label
    tuples give statistically independent streams.
    """
    key = tuple(int(v) for v in labels)
    if any(v < 0 for v in key):
        raise ValueError("stream labels must be nonnegative integers")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)


def derive_stream(master_seed: int, labels: Iterable[int]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, labels)))


def name_label(name: str) -> int:
    """Stable integer label for a string, independent of list positions."""
    return zlib.crc32(name.encode("utf-8"))
