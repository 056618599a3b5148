"""Exhaustive search over one-option-per-robot choices, evaluated in vectorized chunks.

Choices are enumerated in C order of the per-robot option indices, so the first maximum found is the
lexicographically smallest choice vector. Chunks may be evaluated by several joblib workers; the merge walks the
chunks in order and only replaces the incumbent on a strictly larger value, so serial and parallel runs agree.
"""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from sata.constants import Limits
from sata.core import EnumerationCapExceeded

OBJECTIVES = ('bottleneck', 'wta')


@dataclass(frozen=True)
class EnumerationResult:
    choice: Tuple[int, ...]  # 0-based option index per block
    value: float
    enumerated: int


def enumeration_size(option_counts: Sequence[int]) -> int:
    return math.prod(int(count) for count in option_counts)


def _chunk_best(blocks: List[np.ndarray], objective: str, shape: Tuple[int, ...], start: int, stop: int) -> Tuple[float, int]:
    digits = np.unravel_index(np.arange(start, stop), shape)
    # Bottleneck adds the selected rows, WinnerTakesAll keeps the best observer per target.
    reducer = np.add if objective == 'bottleneck' else np.maximum
    totals = blocks[0][digits[0]]
    for block, index in zip(blocks[1:], digits[1:]):
        totals = reducer(totals, block[index])
    if objective == 'wta':
        values = totals.sum(axis=1)
    elif totals.shape[1]:
        values = totals.min(axis=1)
    else:
        values = np.full(stop - start, math.inf)
    best = int(np.argmax(values))
    return float(values[best]), start + best


def maximize_over_choices(blocks: Sequence[np.ndarray], objective: str, cap: int = Limits.ENUMERATION_CAP, n_jobs: int = 1,
                          chunk: int = Limits.ENUMERATION_CHUNK) -> EnumerationResult:
    """Finds the choice of one row per block that maximizes the objective.

    blocks[i] has one row per option of robot i and one column per target; every block has the same width.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}.")
    blocks = [np.asarray(block, dtype=float) for block in blocks]
    shape = tuple(len(block) for block in blocks)
    total = enumeration_size(shape)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} assignments exceed the enumeration cap of {cap}.")

    bounds = [(start, min(start + chunk, total)) for start in range(0, total, chunk)]
    if n_jobs == 1 or len(bounds) == 1:
        results = [_chunk_best(blocks, objective, shape, start, stop) for start, stop in bounds]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(_chunk_best)(blocks, objective, shape, start, stop) for start, stop in bounds)

    best_value, best_index = results[0]
    for value, index in results[1:]:
        if value > best_value:
            best_value, best_index = value, index
    choice = tuple(int(digit) for digit in np.unravel_index(best_index, shape))
    return EnumerationResult(choice, best_value, total)
