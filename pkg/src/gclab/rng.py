"""Counter-based pseudo-random generator used everywhere randomness is needed.

The generator is a pure function of ``(seed, counter)`` built from the
splitmix64 finalizer: ``value(seed, i) = finalize(seed + (i + 1) * GOLDEN)``
with all arithmetic modulo 2**64.  Identical (seed, counter) pairs produce
identical output on every platform and build, which is what makes runs and
noise realizations reproducible byte-for-byte.

Sub-streams are derived by hashing a string tag into the seed
(``derive_seed``), so e.g. weight init, label noise, and per-epoch shuffles
never share counters.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, tag: str) -> int:
    """Derive an independent sub-stream seed from a base seed and a tag string."""
    h = _FNV_OFFSET
    for b in tag.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return _finalize((seed & _MASK) ^ h)


class CounterRng:
    """Stateless-by-construction RNG: draw i is a function of (seed, i) only.

    A small internal cursor supports sequential use; ``at(i)`` gives random
    access.  All draws are uint64 words pushed through the splitmix64
    finalizer.
    """

    def __init__(self, seed: int, tag: str = ""):
        self.seed = derive_seed(seed, tag) if tag else (seed & _MASK)
        self.cursor = 0

    def at(self, counter: int) -> int:
        """The uint64 word at position ``counter`` of this stream."""
        return _finalize((self.seed + ((counter + 1) * _GOLDEN)) & _MASK)

    def _take(self, n: int) -> np.ndarray:
        idx = np.arange(self.cursor + 1, self.cursor + n + 1, dtype=np.uint64)
        self.cursor += n
        with np.errstate(over="ignore"):
            z = (np.uint64(self.seed) + idx * np.uint64(_GOLDEN))
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return z

    def u64(self, n: int | None = None):
        """Next raw word, or an array of the next ``n`` words."""
        if n is None:
            return int(self._take(1)[0])
        return self._take(n)

    def uniform(self, n: int | None = None):
        """Floats in [0, 1) with 53-bit resolution."""
        if n is None:
            return (self.u64() >> 11) * 2.0**-53
        return (self._take(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform_signed(self, shape, scale: float = 1.0) -> np.ndarray:
        """Array of floats uniform in [-scale, scale)."""
        n = int(np.prod(shape))
        return ((self.uniform(n) * 2.0 - 1.0) * scale).reshape(shape)

    def integers(self, high: int, n: int | None = None):
        """Integers in [0, high). Uses modulo reduction; the bias is
        high/2**64 and irrelevant at the scales used here."""
        if high <= 0:
            raise ValueError("high must be positive")
        if n is None:
            return self.u64() % high
        return (self._take(n) % np.uint64(high)).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) via key sort of random words."""
        keys = self._take(n)
        return np.argsort(keys, kind="stable")
