"""ElGamal in the exponent over an elliptic curve, with Shamir threshold keys.

A ciphertext of ``m`` is ``(r*P, m*P + r*pk)``. Plaintexts live in the
exponent, so decryption yields the point ``m*P``; the protocols only ever
need a zero test or a discrete log of a small value, both provided here.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .group import POINT_SIZE, Group, get_group

MAX_DECODE_BOUND = 1 << 40
CIPHERTEXT_SIZE = 2 * POINT_SIZE


class DecryptionError(ValueError):
    pass


@dataclass(frozen=True)
class PublicKey:
    group: Group = field(repr=False)
    point: object

    def to_bytes(self) -> bytes:
        return self.group.encode(self.point)

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "PublicKey":
        return cls(group, group.decode(data))


@dataclass(frozen=True)
class AheKeyPair:
    sk: int
    pk: PublicKey


@dataclass(frozen=True)
class KeyShare:
    index: int
    value: int


@dataclass(frozen=True, eq=False)
class Ciphertext:
    group: Group = field(repr=False)
    c1: object
    c2: object

    def to_bytes(self) -> bytes:
        return self.group.encode(self.c1) + self.group.encode(self.c2)

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "Ciphertext":
        if len(data) != CIPHERTEXT_SIZE:
            raise ValueError(f"ciphertext must be {CIPHERTEXT_SIZE} bytes")
        return cls(group, group.decode(data[:POINT_SIZE]), group.decode(data[POINT_SIZE:]))

    def __eq__(self, other):
        return isinstance(other, Ciphertext) and self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(self.to_bytes())


@dataclass(frozen=True)
class PartialDecryption:
    index: int
    decryptors: tuple[int, ...]
    point: object


def keygen(group: Group, rng: random.Random) -> AheKeyPair:
    s = 1 + rng.randrange(group.order - 1)
    return AheKeyPair(s, PublicKey(group, group.mul_base(s)))


def keypair_from_secret(group: Group, s: int) -> AheKeyPair:
    return AheKeyPair(s % group.order, PublicKey(group, group.mul_base(s)))


def _poly_eval(coeffs: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def threshold_keygen(
    group: Group, n: int, t: int, rng: random.Random
) -> tuple[PublicKey, list[KeyShare]]:
    """Dealer-side key generation: ``s`` shared by a degree ``t-1`` polynomial."""
    p = group.order
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got t={t}, n={n}")
    if n >= p:
        raise ValueError("too many parties for the group order")
    coeffs = [1 + rng.randrange(p - 1)] + [rng.randrange(p) for _ in range(t - 1)]
    shares = [KeyShare(i, _poly_eval(coeffs, i, p)) for i in range(1, n + 1)]
    return PublicKey(group, group.mul_base(coeffs[0])), shares


def lagrange_coefficient(i: int, decryptors: Iterable[int], p: int) -> int:
    """L_i(0) over the given index set, mod p."""
    num, den = 1, 1
    for j in decryptors:
        if j == i:
            continue
        num = num * (-j) % p
        den = den * (i - j) % p
    return num * pow(den, -1, p) % p


def reconstruct_secret(shares: Sequence[KeyShare], p: int) -> int:
    idx = [s.index for s in shares]
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate share index")
    return sum(s.value * lagrange_coefficient(s.index, idx, p) for s in shares) % p


def encrypt(pk: PublicKey, m: int, rng: random.Random) -> Ciphertext:
    g = pk.group
    return encrypt_point(pk, g.mul_base(m % g.order), rng)


def encrypt_point(pk: PublicKey, point, rng: random.Random) -> Ciphertext:
    """ElGamal on a group element; used to forward partial decryptions."""
    g = pk.group
    r = 1 + rng.randrange(g.order - 1)
    return Ciphertext(g, g.mul_base(r), g.add(point, g.mul(pk.point, r)))


def trivial(group: Group, m: int) -> Ciphertext:
    """Noiseless encryption ``(0, m*P)``; only for server-side constants that get
    re-randomised before leaving the server."""
    return Ciphertext(group, None, group.mul_base(m % group.order))


def add(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    g = c1.group
    return Ciphertext(g, g.add(c1.c1, c2.c1), g.add(c1.c2, c2.c2))


def add_all(cts: Iterable[Ciphertext]) -> Ciphertext:
    cts = list(cts)
    if not cts:
        raise ValueError("nothing to add")
    out = cts[0]
    for c in cts[1:]:
        out = add(out, c)
    return out


def negate(c: Ciphertext) -> Ciphertext:
    g = c.group
    return Ciphertext(g, g.neg(c.c1), g.neg(c.c2))


def sub(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    return add(c1, negate(c2))


def scalar_mul(c: Ciphertext, a: int) -> Ciphertext:
    g = c.group
    return Ciphertext(g, g.mul(c.c1, a), g.mul(c.c2, a))


def rerandomize(pk: PublicKey, c: Ciphertext, rng: random.Random) -> Ciphertext:
    return add(c, encrypt(pk, 0, rng))


def xor_plain(c: Ciphertext, b: int, pk: PublicKey, rng: random.Random) -> Ciphertext:
    """Encryption of ``a XOR b`` from an encryption of bit ``a`` and clear bit ``b``."""
    if b not in (0, 1):
        raise ValueError("b must be a bit")
    if b == 0:
        return c
    return sub(encrypt(pk, 1, rng), c)


def decrypt_point(sk: int, c: Ciphertext):
    g = c.group
    return g.sub(c.c2, g.mul(c.c1, sk))


def partial_decrypt(share: KeyShare, decryptors: Sequence[int], c: Ciphertext) -> PartialDecryption:
    decryptors = tuple(decryptors)
    if len(set(decryptors)) != len(decryptors):
        raise ValueError("decryptor set has duplicates")
    if share.index not in decryptors:
        raise ValueError(f"share {share.index} not in decryptor set {decryptors}")
    g = c.group
    coeff = lagrange_coefficient(share.index, decryptors, g.order)
    return PartialDecryption(share.index, decryptors, g.mul(c.c1, share.value * coeff))


def final_decrypt(c: Ciphertext, partials: Sequence[PartialDecryption]):
    """Recombine partial decryptions into ``m*P``."""
    if not partials:
        raise DecryptionError("no partial decryptions")
    announced = partials[0].decryptors
    if any(p.decryptors != announced for p in partials):
        raise DecryptionError("partials computed for different decryptor sets")
    idx = [p.index for p in partials]
    if len(set(idx)) != len(idx):
        raise DecryptionError("duplicate partial decryption")
    if sorted(idx) != sorted(announced):
        raise DecryptionError(f"expected partials from {announced}, got {tuple(idx)}")
    g = c.group
    return g.sub(c.c2, g.sum(p.point for p in partials))


def is_zero(group: Group, point) -> bool:
    return group.is_identity(point)


@lru_cache(maxsize=16)
def _baby_steps(group: Group, m: int) -> dict[bytes, int]:
    table = {}
    pt = None
    for j in range(m):
        table.setdefault(group.encode(pt), j)
        pt = group.add(pt, group.generator)
    return table


def decode_bounded(group: Group, point, bound: int) -> int | None:
    """Discrete log of ``point`` if it lies in [0, bound), else ``None``."""
    if bound < 1 or bound > MAX_DECODE_BOUND:
        raise ValueError(f"decode bound must be in [1, 2^40], got {bound}")
    m = max(1, math.isqrt(bound - 1) + 1)
    table = _baby_steps(group, m)
    giant = group.neg(group.mul_base(m))
    cur = point
    for i in range((bound + m - 1) // m):
        j = table.get(group.encode(cur))
        if j is not None:
            value = i * m + j
            return value if value < bound else None
        cur = group.add(cur, giant)
    return None


def decrypt(sk: int, c: Ciphertext, bound: int) -> int | None:
    return decode_bounded(c.group, decrypt_point(sk, c), bound)


# Hybrid encryption of byte strings under a personal key.
def _keystream(group: Group, shared, n: int) -> bytes:
    return hashlib.shake_256(b"skre-seal" + group.encode(shared)).digest(n)


@dataclass(frozen=True, eq=False)
class SealedBox:
    group: Group = field(repr=False)
    ephemeral: object
    body: bytes

    def to_bytes(self) -> bytes:
        return self.group.encode(self.ephemeral) + self.body

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "SealedBox":
        return cls(group, group.decode(data[:POINT_SIZE]), bytes(data[POINT_SIZE:]))


def seal(pk: PublicKey, data: bytes, rng: random.Random) -> SealedBox:
    g = pk.group
    r = 1 + rng.randrange(g.order - 1)
    stream = _keystream(g, g.mul(pk.point, r), len(data))
    return SealedBox(g, g.mul_base(r), bytes(a ^ b for a, b in zip(data, stream)))


def open_sealed(sk: int, box: SealedBox) -> bytes:
    g = box.group
    stream = _keystream(g, g.mul(box.ephemeral, sk), len(box.body))
    return bytes(a ^ b for a, b in zip(box.body, stream))


def default_group() -> Group:
    return get_group()
