"""Deterministic random streams with hash-derived substreams.

Every stochastic component of the toolkit draws from a RandomStream.
Substreams are derived from (seed, index) through SHA-256, so concurrent
trials, optimizer restarts and protocol roles each own an independent
stream whose draws do not depend on scheduling order.

Derivation rule (stable across versions, documented for replay):
    substream(index).seed = first 8 bytes, big-endian, of
    SHA-256(b"<seed>/<index>")
and every stream is a numpy PCG64 generator seeded with that integer.
"""

from __future__ import annotations

import hashlib

import numpy as np


class RandomStream:
    """A seeded PCG64 generator plus deterministic substream derivation."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.gen = np.random.default_rng(self.seed)

    def substream(self, index: int | str) -> "RandomStream":
        """Independent stream derived from (this stream's seed, index)."""
        digest = hashlib.sha256(f"{self.seed}/{index}".encode("ascii")).digest()
        return RandomStream(int.from_bytes(digest[:8], "big"))

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return float(self.gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self.gen.random(n)

    def integers(self, low: int, high: int, size: int | None = None):
        """Integers in [low, high), scalar when size is None."""
        out = self.gen.integers(low, high, size=size)
        return int(out) if size is None else out

    def subset(self, n: int, size: int) -> list[int]:
        """Sorted random subset of range(n) without replacement."""
        return sorted(int(i) for i in self.gen.choice(n, size=size, replace=False))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed})"
