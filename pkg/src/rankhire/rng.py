"""Reproducible random streams for replicated simulation.

Replicates are grouped into fixed-size blocks.  Block ``b`` of stream ``tag``
under master seed ``s`` draws from a Philox generator keyed by
``SeedSequence([s, tag, b])``, so results never depend on how blocks are
scheduled over threads.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

BLOCK_SIZE = 4096
MASK64 = (1 << 64) - 1


def stream_tag(name: str) -> int:
    return zlib.crc32(name.encode())


@dataclass(frozen=True)
class RngSeed:
    master: int
    replicate: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master", int(self.master) & MASK64)

    def generator(self, stream: str = "trace") -> np.random.Generator:
        ss = np.random.SeedSequence([self.master, stream_tag(stream), self.replicate])
        return np.random.Generator(np.random.Philox(ss))

    def as_dict(self):
        return {"master": self.master, "replicate": self.replicate}


def as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return RngSeed(int(seed))


def block_generator(master: int, stream: str, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(master) & MASK64, stream_tag(stream), 1 << 32, block])
    return np.random.Generator(np.random.Philox(ss))


def run_blocks(fn, master, stream, reps, threads=1, block_size=BLOCK_SIZE):
    """Call ``fn(gen, count)`` per block and return results in block order."""
    jobs = []
    for b, start in enumerate(range(0, reps, block_size)):
        jobs.append((b, min(block_size, reps - start)))

    def work(job):
        b, count = job
        return fn(block_generator(master, stream, b), count)

    if threads <= 1 or len(jobs) == 1:
        return [work(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, jobs))
