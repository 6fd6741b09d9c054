import logging
from typing import Callable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

JACKKNIFE_BLOCKS = 100


def jackknife(values: np.ndarray, estimator: Callable[[np.ndarray], float],
              blocks: int = JACKKNIFE_BLOCKS) -> Tuple[float, float]:
    """
    Delete-one-block jackknife: (estimate on all rows, standard error)
    """
    values = np.asarray(values)
    size = values.shape[0]
    if size < 2:
        raise ValueError(f"jackknife needs at least 2 values, got {size}")

    blocks = min(blocks, size)
    estimate = estimator(values)
    edges = np.linspace(0, size, blocks + 1).astype(int)
    leave_out = np.array([
        estimator(np.concatenate([values[:lo], values[hi:]])) for lo, hi in zip(edges[:-1], edges[1:])
    ])
    spread = np.abs(leave_out - leave_out.mean()) ** 2
    error = np.sqrt((blocks - 1) / blocks * np.sum(spread))
    logger.debug(f"Jackknife over {blocks} blocks of {size} rows: error {error:.3e}")
    return estimate, float(error)
