"""Seedable random streams.

Every source of randomness in the package is an :class:`RngStream`.  Child
streams are derived from a parent seed and an integer index, so a single
root seed determines every draw of a run.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mix."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of child stream ``index`` of a stream seeded with ``seed``."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return mix64((seed & _MASK64) ^ mix64(index + 1))


class RngStream:
    """A single-owner random stream backed by numpy's PCG64.

    Equal seeds give identical draw sequences.  Do not share one stream
    between concurrent consumers; hand each one its own ``spawn(i)``.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(seed))

    def spawn(self, index: int) -> "RngStream":
        return RngStream(derive_seed(self.seed, index))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"

    # thin pass-throughs so callers never touch the generator directly
    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def standard_gamma(self, shape, size=None):
        return self.generator.standard_gamma(shape, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)


def as_stream(rng: RngStream | int | None, default_seed: int = 0) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(default_seed if rng is None else rng)
