"""Named, reproducible random streams.

Every stochastic component of the toolkit draws from its own stream derived
from (master seed, label, indices).  Streams are independent of thread
scheduling and of each other, which is what makes run outputs bit-reproducible
and lets two runs that share a seed consume identical samples even when other
parameters differ.
"""

import zlib

import numpy as np

_U64 = (1 << 64) - 1
_U32 = (1 << 32) - 1


def _label_key(label):
    return zlib.crc32(label.encode("ascii")) & _U32


def stream(seed, label, *indices):
    """Return a numpy Generator for the (seed, label, *indices) stream.

    :param seed: master seed, any Python int
    :param label: short ascii stream name, e.g. "eval-dist"
    :param indices: nonnegative ints identifying the task (stage, episode, ...)
    """
    key = (_label_key(label),) + tuple(int(i) & _U32 for i in indices)
    ss = np.random.SeedSequence(entropy=int(seed) & _U64, spawn_key=key)
    return np.random.default_rng(ss)


def substream_seed(seed, label, *indices):
    """Derive a 64-bit child seed usable as the master seed of a sub-run."""
    key = (_label_key(label),) + tuple(int(i) & _U32 for i in indices)
    ss = np.random.SeedSequence(entropy=int(seed) & _U64, spawn_key=key)
    return int(ss.generate_state(2, np.uint32).view(np.uint64)[0])
