"""
Seeded random streams.
All randomness in a run flows from one master seed through split_stream().
"""
from typing import Tuple

import numpy as np

# Purposes used as the last spawn-key component.
EVENTS = 0
GEOMETRY = 1
COLORS = 2
WALKS = 3


class RngStream:
    """
    Single-owner random stream keyed by (seed, key).

    Identical (seed, key) gives an identical sequence on the same build.
    Never share one instance between workers; derive children instead.
    """

    def __init__(self, seed: int, key: Tuple[int, ...] = ()):
        if not (0 <= int(seed) < 2 ** 64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.generator = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        )

    def child(self, *key: int) -> "RngStream":
        """Independent stream for a sub-task, keyed below this one"""
        return RngStream(self.seed, self.key + tuple(key))

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def geometric(self, p, size=None):
        return self.generator.geometric(p, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"


def split_stream(master_seed: int, replica: int, purpose: int = EVENTS) -> RngStream:
    """
    The documented split function: replica r of a run with master seed s
    uses SeedSequence(entropy=s, spawn_key=(r, purpose)).
    Streams depend on the replica index only, never on the worker that runs it.
    """
    return RngStream(master_seed, (replica, purpose))
