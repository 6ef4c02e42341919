"""Deterministic randomness for reproducible protocol runs.

Every party derives its randomness from labelled sub-streams of a keyed
counter-mode PRF, so the values drawn for one purpose never depend on the
order in which messages for other purposes happened to arrive.
"""

from __future__ import annotations

import hashlib
import random
import secrets

_BLOCK = 64


class PrfRandom(random.Random):
    """`random.Random` driven by BLAKE2b in counter mode.

    Only `getrandbits` and `random` are overridden; `randrange`, `shuffle`,
    `sample` and friends come from the stdlib implementation on top of them.
    """

    def __init__(self, key: bytes | int | str | None = None):
        self._key = b""
        self._counter = 0
        self._buf = b""
        super().__init__(key)

    def seed(self, a=None, version=2):  # noqa: D102 - stdlib signature
        if a is None:
            key = secrets.token_bytes(32)
        elif isinstance(a, bytes):
            key = a
        elif isinstance(a, int):
            key = a.to_bytes((a.bit_length() + 8) // 8, "big", signed=True)
        else:
            key = str(a).encode()
        self._key = hashlib.blake2b(key, digest_size=32, person=b"skre-rng").digest()
        self._counter = 0
        self._buf = b""

    def getstate(self):
        return (self._key, self._counter, self._buf)

    def setstate(self, state):
        self._key, self._counter, self._buf = state

    def _take(self, nbytes: int) -> bytes:
        while len(self._buf) < nbytes:
            block = hashlib.blake2b(
                self._counter.to_bytes(16, "big"), key=self._key, digest_size=_BLOCK
            ).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:nbytes], self._buf[nbytes:]
        return out

    def getrandbits(self, k: int) -> int:
        if k < 0:
            raise ValueError("number of bits must be non-negative")
        if k == 0:
            return 0
        value = int.from_bytes(self._take((k + 7) // 8), "big")
        return value >> (-k % 8)

    def random(self) -> float:
        return self.getrandbits(53) * (2.0**-53)

    def randbytes(self, n: int) -> bytes:
        return self._take(n)

    def fork(self, *labels: object) -> "PrfRandom":
        """Independent child stream named by `labels`; does not advance self."""
        h = hashlib.blake2b(self._key, digest_size=32, person=b"skre-fork")
        for label in labels:
            h.update(b"\x00" + str(label).encode())
        return PrfRandom(h.digest())

    def nonzero_below(self, p: int) -> int:
        """Uniform in [1, p)."""
        return 1 + self.randrange(p - 1)

    def permutation(self, n: int) -> list[int]:
        """Uniform permutation of range(n)."""
        perm = list(range(n))
        self.shuffle(perm)
        return perm


def make_rng(seed: int | bytes | None) -> PrfRandom:
    """Seeded stream for tests; `None` keys the PRF from OS entropy."""
    return PrfRandom(seed)
