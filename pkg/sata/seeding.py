"""Splittable, counter-based random streams.

Every random draw in the toolkit comes from one integer seed. A stream is
addressed by the seed plus a tuple of labels (for example
``(seed, "sweep", case_key, trial)``); two streams with different labels never
share state, so adding a solver or a policy to an experiment does not move any
other component's draws.
"""
import hashlib
from typing import Union

import numpy as np

Seed = Union[int, np.random.Generator]


def _stable_key(label) -> int:
    # Python's hash() is salted per process; labels must map to the same key on every run.
    if isinstance(label, (int, np.integer)) and label >= 0:
        return int(label)
    digest = hashlib.sha256(repr(label).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def make_rng(seed: int, *labels) -> np.random.Generator:
    """Returns a Philox-backed generator for the stream (seed, *labels)."""
    if seed < 0:
        raise ValueError(f"Seeds must be non-negative integers, got {seed}.")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(_stable_key(label) for label in labels))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *labels) -> int:
    """Derives a 63-bit child seed, recorded in CSV rows so a single row can be replayed."""
    return int(make_rng(seed, *labels).integers(0, 2 ** 63 - 1))


def as_generator(seed: Seed, *labels) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed, *labels)
