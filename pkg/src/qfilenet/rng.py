"""Seeded, counter-based random streams.

Every consumer of randomness gets its own Philox stream whose key is derived
from the scenario seed and a fixed label, so the draws seen by one module do
not depend on how many draws another module made.
"""

import hashlib

import numpy as np

RandomSource = np.random.Generator

STREAM_LABELS = ("user-a", "user-b", "center", "memory", "telenet", "pool-noise", "postprocess")


def substream(seed: int, label: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{seed & 0xFFFFFFFFFFFFFFFF}/{label}".encode(), digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))


def make_streams(seed: int, labels=STREAM_LABELS) -> dict[str, np.random.Generator]:
    return {label: substream(seed, label) for label in labels}


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return substream(int(rng), "default")
