"""Reproducible integer streams for delay draws.

Delays come from the raw 64-bit output of PCG64 (``numpy.random.PCG64``,
PCG XSL-RR 128/64 seeded through ``SeedSequence``). Only the raw stream is
used: NumPy guarantees bit-generator streams stay fixed across releases,
whereas ``Generator`` methods may change their algorithms. Bounded integers
are drawn by rejection, so there is no modulo bias.

Per-sample seeds in an ensemble are ``mix64(master ^ sample_index)`` with the
SplitMix64 finaliser below.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 output function (a bijection on 64-bit integers)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def sample_seed(master: int, index: int) -> int:
    return mix64((master ^ index) & MASK64)


class BoundedStream:
    """Uniform integers in ``[0, bound)`` from a seeded PCG64 raw stream."""

    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._bitgen = np.random.PCG64(seed)

    def integers(self, bound: int, size: int) -> np.ndarray:
        if bound < 1:
            raise ValueError("bound must be positive")
        if size == 0:
            return np.zeros(0, dtype=np.int64)
        if bound == 1:
            # Still consume the stream so draw counts do not depend on tau_d.
            self._bitgen.random_raw(size)
            return np.zeros(size, dtype=np.int64)
        b = np.uint64(bound)
        raw = self._bitgen.random_raw(size)
        rem = (1 << 64) % bound
        if rem == 0:
            return (raw % b).astype(np.int64)
        # Accept only below the largest multiple of bound that fits in 64 bits.
        limit = (1 << 64) - rem
        reject = np.flatnonzero(raw >= np.uint64(limit))
        for idx in reject:
            r = self._bitgen.random_raw()
            while r >= limit:
                r = self._bitgen.random_raw()
            raw[idx] = r
        return (raw % b).astype(np.int64)
