"""Deterministic seed derivation and normal variate generation.

Every random quantity in the package descends from a single 64-bit master
seed. Sub-streams (per path, per step, per purpose) are derived with a
splitmix64-style integer hash, so they are independent, reproducible, and
stable across platforms and numpy versions. Normal variates come from the
polar Box-Muller transform driven by a Philox counter-based generator.
"""

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Hash a master seed with any number of integer tags into a new seed.

    Pure integer arithmetic; the same inputs give the same output on any
    machine. Distinct part tuples give (for practical purposes) distinct
    streams.
    """
    x = master & _MASK64
    for p in parts:
        x = _splitmix64(x ^ (p & _MASK64))
    return x


def uniform_generator(seed: int) -> np.random.Generator:
    """Philox generator for the given derived seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


class GaussianStream:
    """Sequential standard normal variates via polar Box-Muller.

    The acceptance-rejection step consumes the underlying uniform stream
    strictly in order, so draw(3) followed by draw(2) yields the same five
    values as a single draw(5).
    """

    _CHUNK = 4096

    def __init__(self, seed: int):
        self._rng = uniform_generator(seed)
        self._buf = np.empty(0, dtype=np.float64)

    def draw(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("draw size must be non-negative")
        out = []
        have = self._buf.size
        while have < n:
            u = self._rng.random((self._CHUNK, 2)) * 2.0 - 1.0
            s = u[:, 0] ** 2 + u[:, 1] ** 2
            ok = (s > 0.0) & (s < 1.0)
            us, ss = u[ok], s[ok]
            f = np.sqrt(-2.0 * np.log(ss) / ss)
            pairs = us * f[:, None]
            self._buf = np.concatenate([self._buf, pairs.ravel()])
            have = self._buf.size
        out, self._buf = self._buf[:n].copy(), self._buf[n:]
        return out


def normal_variates(seed: int, n: int) -> np.ndarray:
    """Draw n standard normals from a fresh stream for the given seed."""
    return GaussianStream(seed).draw(n)
