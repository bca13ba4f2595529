"""xorshift64* generator seeded through splitmix64.

Chosen because it is a few lines in any language, so a dataset generated from
a given seed can be regenerated bit-for-bit elsewhere. Bounded draws use
modulo with rejection of the low, biased zone, so they are exactly uniform.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@njit(cache=True)
def _fill_below(state, bound, count):
    out = np.empty(count, dtype=np.uint64)
    threshold = (np.uint64(0) - bound) % bound
    s12 = np.uint64(12)
    s25 = np.uint64(25)
    s27 = np.uint64(27)
    mult = np.uint64(_MULT)
    x = state
    i = 0
    while i < count:
        x ^= x >> s12
        x ^= x << s25
        x ^= x >> s27
        r = x * mult
        if r >= threshold:
            out[i] = r % bound
            i += 1
    return out, x


class XorShift64Star:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.state = splitmix64(seed) or _GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & MASK64

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if not 0 < bound <= MASK64:
            raise ValueError("bound must be in [1, 2**64)")
        threshold = (2**64 - bound) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound

    def draw_below(self, bound: int, count: int) -> np.ndarray:
        """``count`` successive :meth:`below` draws as a uint64 array (compiled loop)."""
        if not 0 < bound <= MASK64:
            raise ValueError("bound must be in [1, 2**64)")
        out, state = _fill_below(np.uint64(self.state), np.uint64(bound), count)
        self.state = int(state)
        return out
