"""Deterministic RNG streams for reproducible single runs and ensembles.

Every simulation draws from a counter-based Philox generator keyed by
``(master_seed, run_index)`` packed into the 128-bit Philox key:

    key = (master_seed mod 2**64) * 2**64 + (run_index mod 2**64)

Run k of an ensemble therefore has a stream that is independent of every other
run and of how (or whether) the runs are scheduled in parallel, and run 0 is
identical to a standalone run with the same master seed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def spawn_generator(master_seed: int, run_index: int = 0) -> np.random.Generator:
    """Independent generator for ensemble member ``run_index`` under ``master_seed``."""
    key = ((int(master_seed) & _MASK64) << 64) | (int(run_index) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
