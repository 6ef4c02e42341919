"""Slotted homomorphic bit vectors and the non-interactive KRE circuit.

The backend is a debug model with the shape of a GF(2) LWE scheme minus
the noise: a secret ``K`` in ``{0,1}^kappa`` split into n XOR shares, a
ciphertext ``(A, b)`` whose slot plaintexts are ``b ^ A.K``, addition by
XOR and multiplication via a relinearisation key. It is exact, keeps the
key material off the evaluating server and mirrors the constraints of a
real slotted scheme (fixed slot count, depth budget, bit plaintexts). It is
NOT secure: without noise the public key can be inverted by Gaussian
elimination. Use it for correctness and accounting only.

Circuit choices: comparison is the linear-depth ripple ladder (depth
``mu'``), the rank counter is a ripple incrementer of width
``w = ceil(log2(n+1))``. :func:`kre_depth` and :func:`kre_mult_count`
give the resulting closed forms.
"""

from __future__ import annotations

import hashlib
import math
import random
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import to_bits

DEFAULT_KAPPA = 32
DEFAULT_DEPTH_BUDGET = 64
_HEADER = struct.Struct(">HHH")


class SheError(ValueError):
    pass


class DepthExceeded(SheError):
    pass


def default_slots(mu_prime: int) -> int:
    return 1 << max(0, (mu_prime - 1).bit_length())


def counter_width(n: int) -> int:
    """Bits needed for a rank in [0..n]."""
    return math.ceil(math.log2(n + 1))


def _rand_bits(rng: random.Random, *shape: int) -> np.ndarray:
    count = int(np.prod(shape))
    raw = np.frombuffer(rng.randbytes((count + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw)[:count].reshape(shape)


def _matvec(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (A.astype(np.int32) @ v.astype(np.int32) & 1).astype(np.uint8)


@dataclass(frozen=True)
class SheParams:
    slots: int
    kappa: int = DEFAULT_KAPPA
    depth_budget: int = DEFAULT_DEPTH_BUDGET

    def __post_init__(self):
        if self.slots < 1 or self.kappa < 1:
            raise SheError("slots and kappa must be positive")


@dataclass(frozen=True, eq=False)
class SheContext:
    """Public evaluation material: encryption samples plus relinearisation key."""

    params: SheParams
    parties: int
    pk_a: np.ndarray = field(repr=False)  # (L, kappa)
    pk_b: np.ndarray = field(repr=False)  # (L,)
    relin_r: np.ndarray = field(repr=False)  # (kappa^2, kappa)
    relin_e: np.ndarray = field(repr=False)  # (kappa^2,)

    @property
    def slots(self) -> int:
        return self.params.slots

    @property
    def fingerprint(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        h.update(_HEADER.pack(self.params.slots, self.params.kappa, self.params.depth_budget))
        h.update(self.parties.to_bytes(4, "big"))
        for arr in (self.pk_a, self.pk_b, self.relin_r, self.relin_e):
            h.update(np.packbits(arr).tobytes())
        return h.digest()


@dataclass(frozen=True)
class SheKeyShare:
    index: int
    bits: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class SlotCiphertext:
    ctx: SheContext = field(repr=False)
    a: np.ndarray = field(repr=False)  # (slots, kappa)
    b: np.ndarray = field(repr=False)  # (slots,)
    depth: int = 0

    def to_bytes(self) -> bytes:
        p = self.ctx.params
        return (
            _HEADER.pack(p.slots, p.kappa, self.depth)
            + np.packbits(self.a).tobytes()
            + np.packbits(self.b).tobytes()
        )

    @classmethod
    def from_bytes(cls, ctx: SheContext, data: bytes) -> "SlotCiphertext":
        slots, kappa, depth = _HEADER.unpack_from(data)
        if (slots, kappa) != (ctx.params.slots, ctx.params.kappa):
            raise SheError("ciphertext shape does not match context")
        na = (slots * kappa + 7) // 8
        body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        if len(body) != na + (slots + 7) // 8:
            raise SheError("ciphertext length mismatch")
        a = np.unpackbits(body[:na])[: slots * kappa].reshape(slots, kappa)
        b = np.unpackbits(body[na:])[:slots]
        return cls(ctx, a, b, depth)

    def __eq__(self, other):
        return isinstance(other, SlotCiphertext) and self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(self.to_bytes())


@dataclass(frozen=True)
class ShePartial:
    index: int
    bits: np.ndarray = field(repr=False)
    lead: bool = False

    def to_bytes(self) -> bytes:
        return bytes([int(self.lead)]) + np.packbits(self.bits).tobytes()

    @classmethod
    def from_bytes(cls, index: int, slots: int, data: bytes) -> "ShePartial":
        bits = np.unpackbits(np.frombuffer(data[1:], dtype=np.uint8))[:slots]
        return cls(index, bits, bool(data[0]))


def she_keygen(params: SheParams, n: int, rng: random.Random) -> tuple[SheContext, list[SheKeyShare]]:
    """Dealer key generation with an n-out-of-n XOR sharing of the secret."""
    if n < 1:
        raise SheError("need at least one party")
    kappa = params.kappa
    secret = _rand_bits(rng, kappa)
    shares = [_rand_bits(rng, kappa) for _ in range(n - 1)]
    last = secret.copy()
    for s in shares:
        last ^= s
    shares.append(last)
    pk_a = _rand_bits(rng, 2 * kappa, kappa)
    pk_b = _matvec(pk_a, secret)
    relin_r = _rand_bits(rng, kappa * kappa, kappa)
    quad = np.outer(secret, secret).reshape(-1).astype(np.uint8)
    relin_e = _matvec(relin_r, secret) ^ quad
    ctx = SheContext(params, n, pk_a, pk_b, relin_r, relin_e)
    return ctx, [SheKeyShare(i + 1, s) for i, s in enumerate(shares)]


def encrypt(ctx: SheContext, slot_bits: Sequence[int], rng: random.Random) -> SlotCiphertext:
    m = ctx.slots
    msg = np.zeros(m, dtype=np.uint8)
    bits = np.asarray(slot_bits, dtype=np.uint8)
    if len(bits) > m:
        raise SheError(f"{len(bits)} bits do not fit in {m} slots")
    if np.any(bits > 1):
        raise SheError("slot values must be bits")
    msg[: len(bits)] = bits
    r = _rand_bits(rng, m, len(ctx.pk_b))
    a = (r.astype(np.int32) @ ctx.pk_a.astype(np.int32) & 1).astype(np.uint8)
    b = _matvec(r, ctx.pk_b) ^ msg
    return SlotCiphertext(ctx, a, b, 0)


def encrypt_bit(ctx: SheContext, bit: int, rng: random.Random) -> SlotCiphertext:
    """A bit replicated across every slot."""
    return encrypt(ctx, [bit] * ctx.slots, rng)


def encrypt_bitwise(ctx: SheContext, value: int, width: int, rng: random.Random) -> list[SlotCiphertext]:
    return [encrypt_bit(ctx, b, rng) for b in to_bits(value, width)]


def encrypt_packed(ctx: SheContext, value: int, width: int, rng: random.Random) -> SlotCiphertext:
    """Bits MSB-first in the leading slots, zeros after."""
    return encrypt(ctx, to_bits(value, width), rng)


def constant(ctx: SheContext, bit: int) -> SlotCiphertext:
    """Noiseless public constant replicated over all slots."""
    m = ctx.slots
    return SlotCiphertext(
        ctx, np.zeros((m, ctx.params.kappa), dtype=np.uint8), np.full(m, bit & 1, dtype=np.uint8), 0
    )


def _check_ctx(cs: Sequence[SlotCiphertext]) -> SheContext:
    ctx = cs[0].ctx
    for c in cs[1:]:
        if c.ctx is not ctx and c.ctx.fingerprint != ctx.fingerprint:
            raise SheError("ciphertexts from different contexts")
    return ctx


class MultCounter:
    """Counts homomorphic multiplications; install with :func:`counting`."""

    def __init__(self):
        self.mults = 0


_counter: MultCounter | None = None


class counting:
    def __init__(self):
        self.counter = MultCounter()

    def __enter__(self) -> MultCounter:
        global _counter
        self._prev, _counter = _counter, self.counter
        return self.counter

    def __exit__(self, *exc):
        global _counter
        _counter = self._prev


def she_add(*cs: SlotCiphertext) -> SlotCiphertext:
    if not cs:
        raise SheError("nothing to add")
    ctx = _check_ctx(cs)
    a = cs[0].a.copy()
    b = cs[0].b.copy()
    for c in cs[1:]:
        a ^= c.a
        b ^= c.b
    return SlotCiphertext(ctx, a, b, max(c.depth for c in cs))


def she_not(c: SlotCiphertext) -> SlotCiphertext:
    return SlotCiphertext(c.ctx, c.a, c.b ^ 1, c.depth)


def she_mult(c1: SlotCiphertext, c2: SlotCiphertext) -> SlotCiphertext:
    ctx = _check_ctx([c1, c2])
    depth = max(c1.depth, c2.depth) + 1
    if depth > ctx.params.depth_budget:
        raise DepthExceeded(f"depth {depth} exceeds budget {ctx.params.depth_budget}")
    if _counter is not None:
        _counter.mults += 1
    a1, a2, b1, b2 = c1.a, c2.a, c1.b, c2.b
    lin_a = (b1[:, None] & a2) ^ (b2[:, None] & a1)
    lin_b = b1 & b2
    # (A1.K)(A2.K) = sum_uv A1[u] A2[v] K_u K_v, each K_u K_v read off the relin key.
    outer = np.einsum("su,sv->suv", a1, a2).reshape(len(b1), -1).astype(np.int32)
    q_a = (outer @ ctx.relin_r.astype(np.int32) & 1).astype(np.uint8)
    q_b = (outer @ ctx.relin_e.astype(np.int32) & 1).astype(np.uint8)
    return SlotCiphertext(ctx, lin_a ^ q_a, lin_b ^ q_b, depth)


def she_cmp(x_bits: Sequence[SlotCiphertext], y_bits: Sequence[SlotCiphertext]):
    """``([x > y], [y > x])`` from MSB-first bit encryptions."""
    if len(x_bits) != len(y_bits):
        raise SheError(f"width mismatch: {len(x_bits)} vs {len(y_bits)}")
    if not x_bits:
        raise SheError("empty operands")

    def gt(xs, ys):
        # c_l = x_l ^ ((x_l ^ c) & (y_l ^ c)) from the LSB with c_0 = 0
        c = None
        for xb, yb in zip(reversed(xs), reversed(ys)):
            if c is None:
                c = she_add(xb, she_mult(xb, yb))
            else:
                c = she_add(xb, she_mult(she_add(xb, c), she_add(yb, c)))
        return c

    return gt(x_bits, y_bits), gt(y_bits, x_bits)


def she_fadder(bits: Sequence[SlotCiphertext], width: int | None = None) -> list[SlotCiphertext]:
    """MSB-first binary encoding of the number of set bits."""
    if not bits:
        raise SheError("need at least one bit")
    w = counter_width(len(bits)) if width is None else width
    ctx = bits[0].ctx
    zero = constant(ctx, 0)
    acc = [bits[0]] + [zero] * (w - 1)  # LSB first
    for b in bits[1:]:
        carry = b
        for pos in range(w):
            s = acc[pos]
            acc[pos] = she_add(s, carry)
            if pos + 1 < w:
                carry = she_mult(s, carry)
    return acc[::-1]


def she_equal(a_bits: Sequence[SlotCiphertext], b_bits: Sequence[SlotCiphertext]) -> SlotCiphertext:
    gt, lt = she_cmp(a_bits, b_bits)
    return she_add(gt, lt, constant(gt.ctx, 1))


def compute_kre_she(
    X: Sequence[Sequence[SlotCiphertext]], Z: Sequence[SlotCiphertext], c: Sequence[SlotCiphertext]
) -> SlotCiphertext:
    """Packed encryption of the input whose rank equals the encrypted ``k``."""
    n = len(X)
    if n == 0 or len(Z) != n:
        raise SheError("X and Z must both hold n entries")
    width = len(X[0])
    if any(len(x) != width for x in X):
        raise SheError("inconsistent input widths")
    w = counter_width(n)
    if len(c) != w:
        raise SheError(f"k must be encrypted on {w} bits")
    ctx = Z[0].ctx
    B: list[list[SlotCiphertext | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        B[i][i] = constant(ctx, 1)
        for j in range(i + 1, n):
            B[i][j], B[j][i] = she_cmp(X[i], X[j])
    ys = []
    for i in range(n):
        rank = she_fadder(B[i], w)
        beta = she_equal(rank, c)
        ys.append(she_mult(Z[i], beta))
    return she_add(*ys)


def kre_depth(mu_prime: int, n: int) -> int:
    return mu_prime + counter_width(n) + 1


def kre_mult_count(mu_prime: int, n: int) -> int:
    w = counter_width(n)
    return mu_prime * n * (n - 1) + n * ((n - 1) * (w - 1) + 2 * w + 1)


def partial_decrypt(share: SheKeyShare, c: SlotCiphertext, lead: bool = False) -> ShePartial:
    """``A.K_i``; the lead decryptor also folds in ``b``."""
    bits = _matvec(c.a, share.bits)
    if lead:
        bits = bits ^ c.b
    return ShePartial(share.index, bits, lead)


def combine_partials(ctx: SheContext, partials: Sequence[ShePartial]) -> np.ndarray:
    """XOR of all n partials (exactly one of them a lead) gives the slot bits."""
    idx = [p.index for p in partials]
    if len(set(idx)) != len(idx):
        raise SheError("duplicate partial decryption")
    if sorted(idx) != list(range(1, ctx.parties + 1)):
        raise SheError(f"need partials from all {ctx.parties} parties, got {sorted(idx)}")
    if sum(p.lead for p in partials) != 1:
        raise SheError("exactly one partial must carry the ciphertext body")
    out = np.zeros(ctx.slots, dtype=np.uint8)
    for p in partials:
        out ^= p.bits
    return out


def she_threshold_decrypt(c: SlotCiphertext, shares: Sequence[SheKeyShare]) -> list[int]:
    if not shares:
        raise SheError("no shares")
    ordered = sorted(shares, key=lambda s: s.index)
    partials = [partial_decrypt(s, c, lead=(k == 0)) for k, s in enumerate(ordered)]
    return [int(v) for v in combine_partials(c.ctx, partials)]
