"""Counter-based random streams keyed by (seed, experiment, replication)."""

import zlib

import numpy as np


def experiment_key(name):
    return zlib.crc32(name.encode("utf-8"))


def stream_key(seed, experiment, replication):
    seed = int(seed)
    return [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF, experiment_key(experiment), int(replication)]


def derive_stream(seed, experiment, replication):
    """Independent Philox stream for one replication of one experiment.

    The stream depends only on the triple, never on scheduling, so any worker
    may produce any replication.
    """
    ss = np.random.SeedSequence(stream_key(seed, experiment, replication))
    return np.random.Generator(np.random.Philox(ss))
