"""Deterministic seed derivation: every random stream is keyed by a path of
integers below one global seed, so results never depend on call order or
thread scheduling."""
from __future__ import annotations

import numpy as np


def _sequence(seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))


def derive_seed(seed: int, *keys: int) -> int:
    return int(_sequence(seed, *keys).generate_state(1, np.uint64)[0])


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_sequence(seed, *keys)))
