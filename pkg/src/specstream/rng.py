"""Deterministic, cross-platform random number generation.

Every random draw in this project (synthetic corpora, weight init, test case
generation) comes from the splitmix64 generator so that fixtures and golden
checksums are reproducible bit-for-bit on any platform and in any language.

The algorithm, in full, on unsigned 64-bit integers with wrapping arithmetic:

    state   <- seed
    next(): state <- state + 0x9E3779B97F4A7C15
            z <- state
            z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
            z <- (z XOR (z >> 27)) * 0x94D049BB133111EB
            return z XOR (z >> 31)

Because the state is an arithmetic sequence, the k-th output is a pure
function of (seed, k); ``SplitMix64`` exploits that to produce whole blocks
of outputs vectorized, and independent named streams are derived by folding
an FNV-1a hash of the stream name into the seed.

Derived real-valued draws:
  * uniforms map the top 53 bits onto [0, 1) (``(x >> 11) * 2**-53``),
  * normals use the Box-Muller transform on pairs of uniforms,
  * bounded ints reduce ``x mod n`` (the modulo bias is < n / 2**64 and
    irrelevant at the ranges used here).

All floating-point results are returned as float32, which absorbs any
last-ulp libm differences between platforms.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK = 0xFFFFFFFFFFFFFFFF

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """FNV-1a hash of ``text``; used to derive per-name substream seeds."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Sequential splitmix64 stream with vectorized block draws."""

    def __init__(self, seed: int, stream: str = ""):
        if stream:
            seed = (seed ^ fnv1a64(stream)) & _MASK
        self._seed = np.uint64(seed & _MASK)
        self._count = 0

    def next_u64(self) -> int:
        return int(self.u64(1)[0])

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + _GAMMA * idx)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` float32 uniforms in [0, 1)."""
        u = (self.u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.astype(np.float32)

    def normal(self, n: int) -> np.ndarray:
        """``n`` float32 standard normals (Box-Muller on uniform pairs)."""
        m = (n + 1) // 2
        raw = self.u64(2 * m)
        # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        u1 = ((raw[:m] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[m:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return out.astype(np.float32)

    def int_range(self, lo: int, hi: int, n: int = 1) -> np.ndarray:
        """``n`` integers uniform over the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = np.uint64(hi - lo + 1)
        return (self.u64(n) % span).astype(np.int64) + lo
