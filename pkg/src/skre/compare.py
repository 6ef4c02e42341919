"""AHE comparison subprotocols: LinCompare and DGK.

Every routine here emits, or lets the caller form, the comparison bit in the
``b_ij = [x_i >= x_j]`` convention used for rank computation.

DGK raw output: with ``s = 1 - 2*delta_ji`` the generator's zero-test bit
``delta_ij`` satisfies ``delta_ij ^ delta_ji = [x_i < x_j]`` when
``delta_ji = 0`` and ``[x_i <= x_j]`` when ``delta_ji = 1``. For distinct
inputs both equal ``1 - [x_i >= x_j]``, so the normalised bit is
``1 ^ delta_ij ^ delta_ji`` (see :func:`dgk_bit`).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from . import aheg
from .aheg import Ciphertext, PublicKey
from .core import ZeroOneEncoding


@dataclass(frozen=True)
class EncryptedEncoding:
    v0: tuple[Ciphertext, ...]
    v1: tuple[Ciphertext, ...]


@dataclass(frozen=True)
class DgkShare:
    delta_ij: int
    delta_ji: int

    @property
    def bit(self) -> int:
        return dgk_bit(self.delta_ij, self.delta_ji)


def encrypt_encoding(pk: PublicKey, enc: ZeroOneEncoding, rng: random.Random) -> EncryptedEncoding:
    return EncryptedEncoding(
        tuple(aheg.encrypt(pk, v, rng) for v in enc.v0),
        tuple(aheg.encrypt(pk, v, rng) for v in enc.v1),
    )


def encrypt_bits(pk: PublicKey, bits: Sequence[int], rng: random.Random) -> tuple[Ciphertext, ...]:
    return tuple(aheg.encrypt(pk, b, rng) for b in bits)


def _blind(c: Ciphertext, pk: PublicKey, rng: random.Random) -> Ciphertext:
    """Multiply the plaintext by a nonzero random scalar and re-randomise."""
    r = 1 + rng.randrange(pk.group.order - 1)
    return aheg.rerandomize(pk, aheg.scalar_mul(c, r), rng)


def lin_compare(
    v1_i: Sequence[Ciphertext], v0_j: Sequence[Ciphertext], pk: PublicKey, rng: random.Random
) -> list[Ciphertext]:
    """Permuted ``[(u_l - v_l) * r_l]``; exactly one zero iff ``x_i > x_j``."""
    if len(v1_i) != len(v0_j):
        raise ValueError(f"encoding length mismatch: {len(v1_i)} vs {len(v0_j)}")
    out = [_blind(aheg.sub(u, v), pk, rng) for u, v in zip(v1_i, v0_j)]
    rng.shuffle(out)
    return out


def lin_compare_bit(group, points) -> int:
    """1 iff some decrypted LinCompare entry is the identity."""
    return int(any(group.is_identity(q) for q in points))


def dgk_eva(
    enc_bits_i: Sequence[Ciphertext],
    x_j: Sequence[int],
    pk_i: PublicKey,
    rng: random.Random,
    delta_ji: int | None = None,
) -> tuple[int, list[Ciphertext]]:
    """Evaluator side: returns ``delta_ji`` and the permuted vector ``Z``.

    ``enc_bits_i`` and ``x_j`` are MSB-first. ``delta_ji`` may be fixed for
    testing; otherwise it is drawn from ``rng``.
    """
    if len(enc_bits_i) != len(x_j):
        raise ValueError(f"bit width mismatch: {len(enc_bits_i)} vs {len(x_j)}")
    if any(b not in (0, 1) for b in x_j):
        raise ValueError("x_j must be a bit vector")
    if delta_ji is None:
        delta_ji = rng.getrandbits(1)
    g = pk_i.group
    s = 1 - 2 * delta_ji
    one = aheg.trivial(g, 1)
    prefix = aheg.trivial(g, 0)  # 3 * sum of xors over more significant positions
    z = []
    for c, xb in zip(enc_bits_i, x_j):
        term = aheg.add(prefix, aheg.add(c, aheg.trivial(g, s - xb)))
        z.append(_blind(term, pk_i, rng))
        xor = aheg.sub(one, c) if xb else c
        prefix = aheg.add(prefix, aheg.scalar_mul(xor, 3))
    rng.shuffle(z)
    return delta_ji, z


def dgk_dec(z: Sequence[Ciphertext], sk_i: int) -> int:
    """Generator side: 1 iff some ``z_u`` encrypts zero."""
    for c in z:
        if c.group.is_identity(aheg.decrypt_point(sk_i, c)):
            return 1
    return 0


def dgk_bit(delta_ij: int, delta_ji: int) -> int:
    """Normalised comparison bit ``[x_i >= x_j]`` for distinct inputs."""
    return 1 ^ delta_ij ^ delta_ji


def dgk_combine(
    enc_delta_ji: Ciphertext, delta_ij: int, pk: PublicKey, rng: random.Random
) -> Ciphertext:
    """``[b_ij]`` under the common key from the evaluator's ``[delta_ji]``."""
    return aheg.xor_plain(enc_delta_ji, 1 ^ delta_ij, pk, rng)


def dgk_compare_local(
    bits_i: Sequence[int],
    bits_j: Sequence[int],
    personal_i: aheg.AheKeyPair,
    common_pk: PublicKey,
    rng: random.Random,
) -> Ciphertext:
    """Run one DGK comparison in-process and return ``[b_ij]`` under ``common_pk``.

    Mirrors the routed message flow: ``C_i -> C_j: [x_i]_i``;
    ``C_j -> C_i: Z, [delta_ji]``; ``C_i -> S: [b_ij]``.
    """
    enc = encrypt_bits(personal_i.pk, bits_i, rng)
    delta_ji, z = dgk_eva(enc, bits_j, personal_i.pk, rng)
    enc_delta = aheg.encrypt(common_pk, delta_ji, rng)
    delta_ij = dgk_dec(z, personal_i.sk)
    return dgk_combine(enc_delta, delta_ij, common_pk, rng)
