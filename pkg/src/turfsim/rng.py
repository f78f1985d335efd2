"""Deterministic random substreams.

Every stream is keyed by the master seed plus a tuple of small integers
(e.g. ``(ocg_id, purpose)``) through :class:`numpy.random.SeedSequence`, so
streams never overlap and do not depend on execution order.
"""
from __future__ import annotations

import numpy as np

__all__ = ["DEPARTURE", "RETURN", "substream", "derive_seed", "ExpStream"]

DEPARTURE = 0
RETURN = 1


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed, e.g. for the ``(eta_index, seed_index)`` cell of a sweep."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, dtype=np.uint64)
    return int(state[0])


class ExpStream:
    """Buffered unit-rate exponential draws from one substream."""

    __slots__ = ("_gen", "_buf", "_pos", "_block")

    def __init__(self, seed: int, *key: int, block: int = 2048):
        self._gen = substream(seed, *key)
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    def draw(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._gen.standard_exponential(self._block).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x
