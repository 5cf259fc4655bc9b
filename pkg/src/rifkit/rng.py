"""Counter-based random streams with a fixed, documented algorithm.

Every stream is Philox4x64-10 (the Random123 counter-based generator) keyed by
``(seed, stream_id)`` with the 256-bit counter starting at zero. Raw 64-bit
words are consumed in the order numpy's ``Philox`` bit generator emits them.
All transforms on top of the raw words are defined here, so another
implementation only needs Philox4x64-10 plus the rules below:

* uniform: ``(word >> 11) * 2**-53`` shifted by half an ulp, i.e. values
  ``(k + 0.5) / 2**53`` in the open interval (0, 1).
* normal: inverse normal CDF (Cephes ``ndtri``, relative error ~1e-15)
  applied to one uniform per variate.
* bounded integer in ``[0, bound)``: reject words below
  ``2**64 mod bound``, then take ``word mod bound``.
* sampling without replacement: partial Fisher-Yates over ``range(n)``.

Stream ids are the first 8 bytes (little endian) of the BLAKE2b digest of a
UTF-8 tag, so named sub-streams never collide in practice.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def stream_id(*tags) -> int:
    text = "/".join(str(t) for t in tags)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


class Stream:
    """One reproducible random stream."""

    def __init__(self, seed: int, *tags):
        self.seed = int(seed) & _MASK64
        self.key = (self.seed, stream_id(*tags) if tags else 0)
        self._bits = np.random.Philox(key=np.array(self.key, dtype=np.uint64))

    def child(self, *tags) -> "Stream":
        return Stream(self.seed, *(("child", self.key[1]) + tags))

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(int(size)).astype(np.uint64, copy=False)

    def uniform(self, size: int) -> np.ndarray:
        words = self.raw(size) >> np.uint64(11)
        return (words.astype(np.float64) + 0.5) * 2.0**-53

    def normal(self, size) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        return ndtri(self.uniform(count)).reshape(shape)

    def integer(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            word = int(self.raw(1)[0])
            if word >= threshold:
                return word % bound

    def sample(self, n: int, k: int) -> np.ndarray:
        """Ordered sample of ``k`` distinct values from ``range(n)``."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.integer(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return np.array(pool[:k], dtype=np.int64)

    def permutation(self, n: int) -> np.ndarray:
        return self.sample(n, n)
