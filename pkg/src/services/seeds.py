"""
Every random stream is derived from one base seed through a named spawn key, so a
run is reproducible from ``(base_seed, stream, index)`` alone and independent of
how sweep points are scheduled.
"""

from __future__ import annotations

import numpy as np

from src.exceptions import ParameterError

STREAMS = {
    "graph": 0,
    "trajectory": 1,
    "synthetic": 2,
}


def derive_seed(base_seed: int, stream: str, index: int = 0) -> int:
    """
    64-bit seed for the ``index``-th member of a named stream.

    :param base_seed: User-facing seed.
    :type base_seed: int
    :param stream: One of ``graph``, ``trajectory``, ``synthetic``.
    :type stream: str
    :param index: Sweep point or run index.
    :type index: int
    :return: Derived seed.
    :rtype: int
    :raises ParameterError: Negative seed or index, or an unknown stream.
    """
    if stream not in STREAMS:
        raise ParameterError(f"unknown seed stream {stream!r}")
    if base_seed < 0 or index < 0:
        raise ParameterError(f"seeds must be non-negative, got base seed {base_seed} and index {index}")
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=(STREAMS[stream], index))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(base_seed: int, stream: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base_seed, stream, index))
