"""
Reproducible random streams

Every stream is a counter-based Philox generator keyed by a 64-bit experiment
seed and a tuple of integer stream ids (trajectory index, role, ...), so the
draws of one trajectory never depend on how work is scheduled across threads.
"""

import numpy as np


def make_stream(seed: int, *stream_ids: int) -> np.random.Generator:
    """
    Build the generator for one logical stream

    Args:
        seed: 64-bit experiment seed
        stream_ids: Integers identifying the stream (e.g. pair index, trajectory role)

    Returns:
        numpy Generator backed by Philox
    """
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(s) for s in stream_ids))
    return np.random.Generator(np.random.Philox(seq))
