"""Seeded random streams.

Every random quantity in the package is drawn from a ``numpy.random.Generator``
backed by the counter-based Philox bit generator.  A stream is addressed by a
pair ``(seed, stream_index)``; the pair is fed to ``SeedSequence`` so that
distinct indices give independent streams and the same pair reproduces the
same draws on every platform.  Parallel workers therefore never share state:
task ``i`` simply opens stream ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= MASK64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (0 <= self.stream_index <= MASK64):
            raise ValueError(f"stream_index must be a 64-bit unsigned integer, got {self.stream_index}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        """Derive a sub-stream; children of different parents never collide."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index, index))
        mixed = int(ss.generate_state(2, dtype=np.uint64)[0])
        return RngStream(mixed, index)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
