import logging

import numpy as np

logger = logging.getLogger(__name__)

_UINT64_MASK = (1 << 64) - 1


def derive_stream(master_seed: int, replicate_index: int) -> np.random.Generator:
    """
    Counter-based stream for one replicate.

    The Philox key is (master_seed, replicate_index), so streams for distinct
    indices are independent and the same pair always yields the same draws.
    """
    if replicate_index < 0:
        raise ValueError(f"replicate_index must be non-negative, got {replicate_index}")

    key = np.array([int(master_seed) & _UINT64_MASK, int(replicate_index) & _UINT64_MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
