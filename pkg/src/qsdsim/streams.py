"""Deterministic random-stream addressing built on numpy SeedSequence.

All randomness in the package flows from one root seed. A RandomStream
names a node in the SeedSequence spawn tree; replica r of an ensemble
uses the child stream ``root.substream(r)``, so results do not depend on
evaluation order or on how replicas are distributed over workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RandomStream:
    """Addressable source of reproducible generators.

    Parameters
    ----------
    entropy : int
        Root seed (any nonnegative integer, typically u64).
    key : tuple of int
        Spawn path below the root. The empty path is the root itself.
    """

    entropy: int
    key: tuple[int, ...] = field(default_factory=tuple)

    def substream(self, *key: int) -> "RandomStream":
        """Child stream at the given path segment(s)."""
        return RandomStream(self.entropy, self.key + tuple(key))

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator owned by the caller.

        Repeated calls return generators with identical output, so a
        stream must feed exactly one logical simulation.
        """
        seq = np.random.SeedSequence(self.entropy, spawn_key=self.key)
        return np.random.default_rng(seq)


def _run_chunk(args: tuple) -> list:
    fn, stream, start, stop = args
    return [fn(stream.substream(r).generator()) for r in range(start, stop)]


def map_replicas(fn, n_replicas: int, stream: RandomStream, workers: int = 1,
                 chunk_size: int = 4096) -> list:
    """Evaluate ``fn(generator)`` for replica substreams 0..n-1.

    ``fn`` must be picklable when workers > 1 (a module-level function or
    functools.partial over one). Results are returned in replica order,
    so the merge is independent of worker count and scheduling.
    """
    if n_replicas < 0:
        raise ValueError("n_replicas must be nonnegative")
    if workers <= 1 or n_replicas <= chunk_size:
        return [fn(stream.substream(r).generator()) for r in range(n_replicas)]
    chunks = [(fn, stream, a, min(a + chunk_size, n_replicas))
              for a in range(0, n_replicas, chunk_size)]
    out: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, chunks):
            out.extend(part)
    return out
