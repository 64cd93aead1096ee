"""Counter-based random streams (Philox), split by trajectory index."""

from __future__ import annotations

import numpy as np


def generator_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def child_generator(master_seed: int, index: int) -> np.random.Generator:
    """
    Stream for trajectory `index` of an ensemble.

    Depends only on (master_seed, index), never on how many streams were drawn
    before, so ensembles are independent of worker count and scheduling order.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))
