# ---------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# Name:        module_rng.py
# Purpose:     deterministic random streams and drop fan-out
#
# ---------------------------------------------------------------------------
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..cli.module_log import Logger


# Stable identifiers: changing them changes every simulated output.
_STREAM_IDS = {
    'cloud': 1,
    'counts': 2,
    'excitation': 3,
    'jitter': 4,
    'lineshape': 5,
    'scan': 6,
}

_SEED_MASK = (1 << 64) - 1


def seed_sequence(master_seed, stream, index=0):
    """
    seed_sequence - SeedSequence for (master seed, stream name, drop index)
    """
    if stream not in _STREAM_IDS:
        raise KeyError(f'Unknown random stream "{stream}"')
    entropy = None if master_seed is None else int(master_seed) & _SEED_MASK
    return np.random.SeedSequence(entropy=entropy, spawn_key=(_STREAM_IDS[stream], int(index)))


def substream(master_seed, stream, index=0):
    """
    substream - independent Generator for one drop of one stream
    """
    return np.random.default_rng(seed_sequence(master_seed, stream, index))


def as_generator(seed):
    """
    as_generator - accept a Generator, an integer seed or None
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def map_drops(func, n_drops, threads=1):
    """
    map_drops - evaluate func(drop_index) for every drop, results in drop order

    The thread count only changes wall time: every drop draws from its own substream
    and the caller reduces the returned list in index order.
    """
    threads = max(1, int(threads or 1))
    if threads == 1 or n_drops <= 1:
        return [func(i) for i in range(n_drops)]
    Logger.debug(f"Running {n_drops} drops on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, range(n_drops)))
