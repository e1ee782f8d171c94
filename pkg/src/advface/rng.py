"""Portable seeded Gaussian stream for toy-embedder weights.

The generator is deliberately simple so that non-Python oracle adapters can
reproduce the exact same weights:

  state_0 = (2 * seed + 1) mod 2^64          (forced odd)
  state_k = (state_{k-1} * 6364136223846793005) mod 2^64
  u_k     = ((state_k >> 11) + 0.5) * 2^-53  (uniform in (0, 1))

Normals come from Box-Muller over consecutive uniform pairs:

  z_{2i}   = sqrt(-2 ln u_{2i}) * cos(2 pi u_{2i+1})
  z_{2i+1} = sqrt(-2 ln u_{2i}) * sin(2 pi u_{2i+1})

A stream of n normals consumes ceil(n/2) pairs; a trailing spare normal is
discarded. All arithmetic is exact in 64-bit integers and IEEE doubles, so
any language with both reproduces the stream bit-for-bit (up to libm's
cos/sin/log, which agree far beyond the 1e-5 parity tolerance).
"""

from __future__ import annotations

import numpy as np

MCG_MULTIPLIER = 6364136223846793005
_MASK64 = (1 << 64) - 1


class PortableRng:
    """Scalar reference implementation of the portable normal stream."""

    def __init__(self, seed: int):
        self._state = (2 * (seed & _MASK64) + 1) & _MASK64
        self._spare = None

    def uniform(self) -> float:
        self._state = (self._state * MCG_MULTIPLIER) & _MASK64
        return ((self._state >> 11) + 0.5) * 2.0**-53

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = np.sqrt(-2.0 * np.log(u1))
        self._spare = float(r * np.sin(2.0 * np.pi * u2))
        return float(r * np.cos(2.0 * np.pi * u2))

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])


def normal_stream(seed: int, n: int) -> np.ndarray:
    """Vectorized equivalent of ``PortableRng(seed).normals(n)``."""
    if n == 0:
        return np.zeros(0)
    pairs = (n + 1) // 2
    # states s_k = s_0 * a^k mod 2^64, computed with wrapping uint64 math
    mult = np.uint64(MCG_MULTIPLIER)
    with np.errstate(over="ignore"):
        powers = np.cumprod(np.full(2 * pairs, mult, dtype=np.uint64))
        s0 = np.uint64((2 * (seed & _MASK64) + 1) & _MASK64)
        states = s0 * powers
    u = ((states >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n]
