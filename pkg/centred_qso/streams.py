#!/usr/bin/env python
# coding: utf-8

"""
Counter-based random streams.

A RandomStream is a value, not a generator: it names a position in the tree of
Philox key material derived from a master seed. Calling ``generator()`` always
returns a fresh generator positioned at the start of that sub-stream, so the
same (seed, stream id, spawn key) reproduces the same draws in any process and
in any evaluation order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np

from centred_qso.errors import QSOValidationError

# Outputs of one sampling call are produced in blocks of this many values;
# block b always uses substream(b), whatever the worker count.
BLOCK_SIZE = 4096

_UINT64_MAX = 2**64 - 1

T = TypeVar("T")


@dataclass(frozen=True)
class RandomStream:
    master_seed: int
    stream_id: int = 0
    spawn_key: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for name, value in (("master_seed", self.master_seed), ("stream_id", self.stream_id)):
            if not 0 <= int(value) <= _UINT64_MAX:
                logging.error("%s=%s is not a 64-bit unsigned integer", name, value)
                raise QSOValidationError(f"{name} must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            int(self.master_seed), spawn_key=(int(self.stream_id), *self.spawn_key)
        )
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RandomStream":
        return RandomStream(self.master_seed, self.stream_id, (*self.spawn_key, int(index)))


def block_sizes(count: int, block_size: int = BLOCK_SIZE) -> List[int]:
    """Split ``count`` outputs into fixed-size blocks (the last one may be short)."""
    full, rest = divmod(count, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(
    work: Callable[[int, int, RandomStream], T],
    count: int,
    stream: RandomStream,
    threads: Optional[int] = None,
    block_size: int = BLOCK_SIZE,
) -> List[T]:
    """
    Evaluate ``work(block_index, size, substream)`` for every block of a batch.

    Parameters:
        work: Callable producing the outputs of one block.
        count (int): Total number of outputs.
        stream (RandomStream): Parent stream of the batch.
        threads (Optional[int]): Worker cap; None uses the executor default.
        block_size (int): Outputs per block.

    Returns:
        List: Block results in block order.
    """
    sizes = block_sizes(count, block_size)
    jobs = [(b, size, stream.substream(b)) for b, size in enumerate(sizes)]
    if threads == 1 or len(jobs) <= 1:
        return [work(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))
