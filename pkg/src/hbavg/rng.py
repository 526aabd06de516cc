"""Deterministic, platform-independent random number generation.

Problem generators must reproduce bit-identical streams from a seed, and the
exact algorithm must be simple enough to re-implement elsewhere.  We therefore
avoid the (version-dependent) numpy Generator machinery and use:

* splitmix64 for the integer stream.  Output i (0-based) for seed s is
  ``mix(s + (i+1) * 0x9E3779B97F4A7C15)`` with all arithmetic mod 2**64 and

      mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
              z ^= z >> 27; z *= 0x94D049BB133111EB
              z ^= z >> 31; return z

* uniforms in [0, 1) as ``(u >> 11) * 2**-53``; uniforms in (0, 1] as
  ``((u >> 11) + 1) * 2**-53`` (used where log(0) must be impossible).

* standard normals by Box-Muller: consecutive uniform pairs (u1, u2) with
  u1 in (0, 1] give ``r*cos(2*pi*u2), r*sin(2*pi*u2)`` where
  ``r = sqrt(-2*ln(u1))``.  An odd request rounds up to a full pair and
  discards the trailing sin value, so normal(k) is a prefix of normal(k+1)
  for even k.

The integer stream is exactly reproducible on any platform; the float
transforms are ordinary IEEE double arithmetic (libm differences can move the
last ulp of the normals across platforms, the stream itself cannot change).
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _MIX1
    z = z ^ (z >> np.uint64(27))
    z = z * _MIX2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based splitmix64 stream with vectorized draws."""

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & _MASK)
        self._count: int = 0

    def uint64(self, n: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * _GAMMA)

    def uniform(self, n: int) -> np.ndarray:
        """Uniforms in [0, 1) with 53-bit resolution."""
        return (self.uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform_open(self, n: int) -> np.ndarray:
        """Uniforms in (0, 1]; safe as a log argument."""
        bits = (self.uint64(n) >> np.uint64(11)).astype(np.float64)
        return (bits + 1.0) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        pairs = (n + 1) // 2
        u = self.uint64(2 * pairs)
        u1 = ((u[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (u[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integers(self, n: int, upper: int) -> np.ndarray:
        """Integers in [0, upper) by floor of uniform scaling (upper << 2**53)."""
        return np.minimum((self.uniform(n) * upper).astype(np.int64), upper - 1)
