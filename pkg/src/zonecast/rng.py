"""Seedable xorshift64* generator for reproducible bootstrap and noise draws.

The generator is Marsaglia's 64-bit xorshift (shifts 12, 25, 27) with Vigna's
``*`` output scrambler (multiply by 0x2545F4914F6CDD1D). Seeds pass through one
SplitMix64 step so that small integers yield well-mixed states. The algorithm
is fixed here on purpose: bootstrap resamples, feature subsets, and synthetic
noise must be reproducible from a seed alone, independent of any platform RNG.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def derive_seed(base_seed: int, label) -> int:
    """Stable 64-bit child seed for (base seed, label) pairs."""
    return _splitmix64((base_seed & _MASK64) ^ _fnv1a64(str(label)))


class Xorshift64Star:
    """Deterministic 64-bit shift-register PRNG."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        state = _splitmix64(self._seed)
        self._state = state if state != 0 else 0x9E3779B97F4A7C15
        self._spare_normal: float | None = None

    def derive(self, label) -> "Xorshift64Star":
        """Independent child stream keyed by the original seed and a label.

        Derivation ignores how many draws were made, so streams for e.g.
        (seed, zone_id) pairs are stable regardless of call order.
        """
        return Xorshift64Star(_splitmix64(self._seed ^ _fnv1a64(str(label))))

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo reduction; bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def bootstrap_indices(self, n: int, size: int | None = None) -> list[int]:
        """Sample ``size`` indices from range(n) with replacement."""
        size = n if size is None else size
        return [self.next_u64() % n for _ in range(size)]

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), returned sorted ascending."""
        if not 0 < k <= n:
            raise ValueError(f"cannot sample {k} from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.next_u64() % (n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Gaussian draw via Box-Muller (one spare cached)."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
        else:
            u1 = 1.0 - self.random()  # (0, 1]: keep log() finite
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z
