"""Deterministic seed derivation.

Every random stream in the package descends from one 64-bit root seed via
``SeedSequence(root, spawn_key=(crc32(tag), replica))``.  Replicas and
purposes therefore never share a stream, and the mapping does not depend on
thread scheduling.
"""
from __future__ import annotations

import zlib

import numpy as np

__all__ = ["tag_code", "derive_seed", "derive_generator"]

_MASK64 = (1 << 64) - 1


def tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def _sequence(root: int, tag: str, replica: int) -> np.random.SeedSequence:
    if replica < 0:
        raise ValueError("replica index must be non-negative")
    return np.random.SeedSequence(int(root) & _MASK64, spawn_key=(tag_code(tag), int(replica)))


def derive_seed(root: int, tag: str, replica: int = 0) -> int:
    """A child 64-bit seed, e.g. for one temperature of a scan."""
    return int(_sequence(root, tag, replica).generate_state(1, np.uint64)[0])


def derive_generator(root: int, tag: str, replica: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_sequence(root, tag, replica)))
