"""Portable, seedable random number generation.

All stochastic components (blob generation, k-means++ seeding, annealing
restarts) draw from the PCG32 generator (PCG-XSH-RR 64/32, Melissa O'Neill's
reference variant) rather than a platform RNG, so that a reimplementation in
another language can reproduce the exact same streams from the same seed.

Conventions, fixed for cross-implementation compatibility:

* ``next_u32`` follows the reference pcg32 step: 64-bit LCG state with
  multiplier 6364136223846793005, output = 32-bit xorshift-high / random
  rotation of the old state.
* ``uniform`` builds a 53-bit double from two consecutive u32 draws:
  ``((a >> 5) * 2^26 + (b >> 6)) / 2^53``.
* ``normal_pair`` is a plain Box-Muller transform consuming exactly two
  uniforms; the first is shifted away from zero as ``(u32 + 0.5) / 2^32``
  so the logarithm is always finite.

``splitmix64`` is provided separately for deriving independent child seeds
(per restart, per loop iteration) from one master seed.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_PCG_MULT = 6364136223846793005


def splitmix64(x: int) -> int:
    """One splitmix64 step; maps any 64-bit value to a well-mixed one."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Derive a child seed from a master seed and an index path.

    Used to give each annealing restart and each pipeline iteration its own
    deterministic stream, independent of how many draws earlier stages took.
    """
    x = master & _MASK64
    for idx in indices:
        x = splitmix64(x ^ ((idx + 1) & _MASK64))
    return x


class Pcg32:
    """PCG-XSH-RR 64/32 generator with the reference seeding sequence."""

    def __init__(self, seed: int, seq: int = 0):
        self._state = 0
        self._inc = (((seq & _MASK64) << 1) | 1) & _MASK64
        self.next_u32()
        self._state = (self._state + (seed & _MASK64)) & _MASK64
        self.next_u32()

    def next_u32(self) -> int:
        old = self._state
        self._state = (old * _PCG_MULT + self._inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))) & 0xFFFFFFFF

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53-bit resolution."""
        a = self.next_u32() >> 5
        b = self.next_u32() >> 6
        return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via floor(u * n).

        The floor construction carries a bias of at most n / 2^53, which is
        irrelevant at the sizes used here and trivially portable.
        """
        if n <= 0:
            raise ValueError("n must be positive")
        v = int(self.uniform() * n)
        return n - 1 if v >= n else v

    def normal_pair(self) -> tuple[float, float]:
        """Two independent standard normals via Box-Muller."""
        u1 = (self.next_u32() + 0.5) * (1.0 / 4294967296.0)
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        return r * math.cos(theta), r * math.sin(theta)
