"""Deterministic random streams.

Every stochastic routine in discgen draws from a :class:`Prng`. The stream is
fully pinned so that a given seed yields bit-identical output on any platform:

* bit source: PCG64 (128-bit LCG state, XSL-RR output) from ``numpy.random``,
  seeded through ``numpy.random.SeedSequence(seed)``; both are covered by
  NumPy's stream-compatibility guarantee (stable since NumPy 1.17);
* uniforms: the top 53 bits of each raw 64-bit word, ``(w >> 11) * 2**-53``;
* normals: Box-Muller on consecutive uniform pairs, cosine branch first;
* exponentials: inversion, ``-log(1 - u) / rate``;
* bounded integers: ``floor(u * n)`` (bias below ``n / 2**53``);
* permutations: argsort of uniform keys with a stable sort.

NumPy's own ``Generator.normal`` etc. are deliberately not used: their
algorithms (ziggurat) are not part of the pinned contract.
"""

from __future__ import annotations

import hashlib

import numpy as np

ALGORITHM = "pcg64-seedseq/boxmuller-v1"

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


def derive_seed(master: int, *tags) -> int:
    """Mix a master seed with text tags into an independent 64-bit seed.

    ``master XOR first-8-bytes(sha256("tag0/tag1/..."))``, so adding a new tag
    never perturbs the stream of an existing one.
    """
    digest = hashlib.sha256("/".join(str(t) for t in tags).encode("utf-8")).digest()
    return (int(master) ^ int.from_bytes(digest[:8], "big")) & _MASK64


class Prng:
    """Seeded stream of uniforms, normals and friends."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._bits = np.random.PCG64(seed)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(int(size)).astype(np.uint64, copy=False)

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniform deviates on [0, 1)."""
        if size is None:
            return float(self.uniform(1)[0])
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        u = (self.raw(count) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return u.reshape(shape)

    def normal(self, size=None, loc=0.0, scale=1.0) -> np.ndarray | float:
        if size is None:
            return float(self.normal(1, loc, scale)[0])
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
        angle = _TWO_PI * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return loc + scale * z.reshape(-1)[:count].reshape(shape)

    def exponential(self, rate: float, size: int) -> np.ndarray:
        return -np.log1p(-self.uniform(size)) / rate

    def integers(self, n: int, size) -> np.ndarray:
        """Integers uniform on ``0 .. n-1``."""
        idx = np.floor(self.uniform(size) * n).astype(np.int64)
        return np.minimum(idx, n - 1)

    def permutations(self, n: int, count: int) -> np.ndarray:
        """``count`` independent permutations of ``range(n)``, one per row."""
        keys = self.uniform((count, n))
        return np.argsort(keys, axis=1, kind="stable")

    def spawn(self, *tags) -> "Prng":
        return Prng(derive_seed(self.seed, *tags))
