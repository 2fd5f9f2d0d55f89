"""Case-level train/test splitting.

Splitting happens on case identifiers, so every modality of a case (slide,
text, expression profile) lands in the same partition.
"""

from __future__ import annotations

import numpy as np

from .errors import TooFewCases
from .types import DatasetSplit

DEFAULT_TEST_FRACTION = 0.2
MIN_CASES = 5


def make_split(
    case_ids: list[str], test_fraction: float = DEFAULT_TEST_FRACTION, seed: int = 0
) -> DatasetSplit:
    """Shuffle case ids with the given seed and carve off the test fraction.

    Ids are sorted before shuffling so the split depends only on the id set
    and the seed, not on incoming order. Test size is round(n * fraction),
    clamped to keep both partitions non-empty.
    """
    ids = sorted(set(case_ids))
    if len(ids) != len(case_ids):
        raise ValueError("case_ids contain duplicates")
    n = len(ids)
    if n < MIN_CASES:
        raise TooFewCases(f"need at least {MIN_CASES} cases, got {n}")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie in (0, 1)")

    rng = np.random.RandomState(seed)
    order = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    shuffled = [ids[i] for i in order]
    return DatasetSplit(train_ids=shuffled[n_test:], test_ids=shuffled[:n_test])
