"""
Seeded random streams.

Every random decision in the toolkit draws from numpy's PCG64 bit
generator. Independent streams are derived from one 64-bit seed by the
``SeedSequence`` spawn-key rule: stream ``k`` of seed ``s`` is
``SeedSequence(entropy=s, spawn_key=(k,))``. Score ``k`` of a generated
dataset uses stream ``k``, so any subset of a dataset can be reproduced
without generating the scores before it, on any platform.

Work that must not share draws with stream ``k`` (mutating input score
``k`` before pooling, for instance) uses a branch: ``spawn_key=(k, branch)``.
"""

from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1
INPUT_MUTATION_BRANCH = 1


def stream_rng(seed: int, stream: int = 0, *, branch: int | None = None) -> np.random.Generator:
    """Generator for stream ``stream`` (optionally a branch of it) of ``seed``."""
    if stream < 0:
        raise ValueError(f"stream index must be non-negative, got {stream}")
    spawn_key = (stream,) if branch is None else (stream, branch)
    sequence = np.random.SeedSequence(entropy=seed & SEED_MASK, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))
