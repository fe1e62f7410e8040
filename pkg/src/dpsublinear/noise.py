"""Seeded randomness: Laplace draws, the Laplace mechanism, sampling without replacement.

A :class:`NoiseSource` carries a 64-bit seed. Bulk draws come from a Philox
(counter-based) generator keyed by that seed. Keyed draws (``keyed_*``)
are pure functions of ``(seed, key)``; they back lazily sampled per-vertex
noise, per-vertex neighbor coins and edge ranks, so a value is the same no
matter when or in which order it is first requested.
"""

from __future__ import annotations

import hashlib
import math
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`splitmix64` on uint64 arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        x = x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def mix_seed(seed: int, tag: str | int) -> int:
    """Derive a child seed from a parent seed and a stage tag."""
    digest = hashlib.blake2b(f"{seed & MASK64}:{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def parse_seed(text: str | int) -> int:
    """Accept a decimal or ``0x``-prefixed hexadecimal seed."""
    if isinstance(text, int):
        value = text
    else:
        s = text.strip().lower()
        try:
            value = int(s, 16) if s.startswith("0x") else int(s, 10)
        except ValueError:
            raise ValueError(f"invalid seed {text!r}: expected decimal or 0x-hex") from None
    if not 0 <= value <= MASK64:
        raise ValueError(f"seed {text!r} is outside the 64-bit range")
    return value


def laplace_inverse_cdf(u: float | np.ndarray, b: float) -> float | np.ndarray:
    """Map a uniform draw in (0, 1) to a Lap(b) variate."""
    c = np.asarray(u, dtype=np.float64) - 0.5
    z = -b * np.sign(c) * np.log1p(-2.0 * np.abs(c))
    return float(z) if np.ndim(z) == 0 else z


def _unit(bits: int) -> float:
    # 53 random bits -> open interval (0, 1); never exactly 0 or 1
    return ((bits >> 11) + 0.5) * _INV_2_53


class NoiseSource:
    """Single-owner random stream for one estimator run (or one stage of it)."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed) & MASK64
        self._rng = np.random.Generator(np.random.Philox(key=self.seed))
        self._key_base = splitmix64(self.seed)

    def child(self, tag: str | int) -> "NoiseSource":
        return NoiseSource(mix_seed(self.seed, tag))

    # bulk draws -----------------------------------------------------------
    def uniform(self, size: int | None = None):
        raw = self._rng.bit_generator.random_raw(size)
        if size is None:
            return _unit(int(raw))
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53

    def laplace(self, b: float, size: int | None = None):
        if not b > 0:
            raise ValueError(f"Laplace scale must be positive, got {b}")
        return laplace_inverse_cdf(self.uniform(size), b)

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        return sample_without_replacement(self, n, k)

    def integers(self, low: int, high: int, size: int | None = None):
        return self._rng.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._rng.permutation(n)

    # keyed draws ----------------------------------------------------------
    def keyed_bits(self, key: int) -> int:
        return splitmix64(self._key_base ^ splitmix64(key & MASK64))

    def keyed_uniform(self, key: int) -> float:
        return _unit(self.keyed_bits(key))

    def keyed_laplace(self, key: int, b: float) -> float:
        """Lap(b) draw tied to ``key``; ``b == 0`` means no noise."""
        if b == 0:
            return 0.0
        if not b > 0:
            raise ValueError(f"Laplace scale must be non-negative, got {b}")
        u = self.keyed_uniform(key) - 0.5
        return -b * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))

    def keyed_uniform_many(self, keys: np.ndarray) -> np.ndarray:
        bits = splitmix64_array(np.uint64(self._key_base) ^ splitmix64_array(np.asarray(keys, dtype=np.uint64)))
        return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53

    def keyed_laplace_many(self, keys: np.ndarray, b: float) -> np.ndarray:
        """Same values as :meth:`keyed_laplace`, one per key."""
        if b == 0:
            return np.zeros(len(keys))
        if not b > 0:
            raise ValueError(f"Laplace scale must be non-negative, got {b}")
        u = self.keyed_uniform_many(keys) - 0.5
        # math.log1p keeps results bit-identical to the scalar path
        return np.array([-b * math.copysign(1.0, x) * math.log1p(-2.0 * abs(x)) for x in u.tolist()])

    def __repr__(self) -> str:
        return f"NoiseSource(seed={self.seed:#018x})"


def sample_laplace(src: NoiseSource, b: float) -> float:
    return src.laplace(b)


def laplace_mechanism(src: NoiseSource, value: float | Sequence[float] | np.ndarray,
                      cgs: float, eps: float) -> np.ndarray:
    """Release ``value`` plus i.i.d. Lap(cgs/eps) noise per coordinate.

    ``cgs == 0`` passes the value through unchanged.
    """
    if not eps > 0:
        raise ValueError(f"privacy budget eps must be positive, got {eps}")
    if cgs < 0:
        raise ValueError(f"sensitivity must be non-negative, got {cgs}")
    v = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if cgs == 0 or math.isinf(eps):
        return v.copy()
    return v + src.laplace(cgs / eps, size=v.shape[0])


def sample_without_replacement(src: NoiseSource, n: int, k: int) -> np.ndarray:
    """Uniform k-subset of ``range(n)``, returned in draw order."""
    if k < 0 or n < 0:
        raise ValueError("n and k must be non-negative")
    if k > n:
        raise ValueError(f"cannot sample {k} items without replacement from {n}")
    if k == n:
        return src.permutation(n).astype(np.int64)
    return src._rng.choice(n, size=k, replace=False).astype(np.int64)
