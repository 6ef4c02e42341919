"""Seeded free-XOR / point-and-permute garbling of the blinded comparator.

The circuit computes ``blind_i ^ blind_j ^ [x >= y]`` with the ladder
``c_l = x_l ^ ((x_l ^ c_{l-1}) & (y_l ^ c_{l-1}))``, ``c_0 = 1``, scanning
from the least significant bit. It has exactly ``mu'`` AND gates; every XOR
(including XOR with the constant) is free.

Both endpoints of a pair run :func:`garble` on the same seed, so each can
encode its own input without oblivious transfer.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .rng import PrfRandom

FORMAT_VERSION = 1
ROWS_PER_GATE = 4
HEADER = struct.Struct(">BHHHB")
_FIXED_KEY = hashlib.sha256(b"skre fixed-key garbling").digest()[:16]
_MASK128 = (1 << 128) - 1


class GarbleError(ValueError):
    pass


@dataclass(frozen=True)
class SharedSeed:
    key: bytes


@dataclass(frozen=True)
class GarbledComparator:
    mu_prime: int
    lam: int
    rows: tuple[tuple[int, int, int, int], ...]
    decode_bit: int

    @property
    def and_gates(self) -> int:
        return len(self.rows)

    @property
    def row_count(self) -> int:
        return ROWS_PER_GATE * len(self.rows)

    def to_bytes(self) -> bytes:
        width = self.lam // 8
        head = HEADER.pack(FORMAT_VERSION, self.mu_prime, len(self.rows), self.lam, self.decode_bit)
        blob = b"".join(r.to_bytes(width, "big") for gate in self.rows for r in gate)
        return head + blob

    @classmethod
    def from_bytes(cls, data: bytes) -> "GarbledComparator":
        version, mu_prime, gates, lam, decode_bit = HEADER.unpack_from(data)
        if version != FORMAT_VERSION:
            raise GarbleError(f"unsupported garbled-circuit version {version}")
        width = lam // 8
        blob = data[HEADER.size :]
        if len(blob) != gates * ROWS_PER_GATE * width:
            raise GarbleError("garbled table length mismatch")
        vals = [int.from_bytes(blob[o : o + width], "big") for o in range(0, len(blob), width)]
        rows = tuple(tuple(vals[g * 4 : g * 4 + 4]) for g in range(gates))
        return cls(mu_prime, lam, rows, decode_bit)


@dataclass(frozen=True)
class Encoding:
    """Zero-labels of both parties' input wires plus the global offset."""

    mu_prime: int
    lam: int
    delta: int
    gen_zero: tuple[int, ...]
    eva_zero: tuple[int, ...]

    def pair(self, side: str, wire: int) -> tuple[int, int]:
        zero = (self.gen_zero if side == "gen" else self.eva_zero)[wire]
        return zero, zero ^ self.delta


def dh_seed(group, own_secret: int, peer_public, lam: int = 128, context: bytes = b"") -> SharedSeed:
    """Pairwise garbling seed from a Diffie-Hellman exchange."""
    if group.is_identity(peer_public):
        raise GarbleError("peer DH value is the identity")
    shared = group.mul(peer_public, own_secret)
    if group.is_identity(shared):
        raise GarbleError("degenerate DH shared point")
    digest = hashlib.sha256(b"skre-gc-seed" + context + group.encode(shared)).digest()
    return SharedSeed(digest[: lam // 8])


class _Hasher:
    """Tweakable hash H(A, B, T) = pi(K) ^ K with K = 2A ^ 4B ^ T and pi fixed-key AES."""

    def __init__(self, lam: int):
        self.lam = lam
        self.mask = (1 << lam) - 1
        self._enc = Cipher(algorithms.AES(_FIXED_KEY), modes.ECB()).encryptor()

    @staticmethod
    def _double(x: int) -> int:
        x <<= 1
        if x >> 128:
            x = (x & _MASK128) ^ 0x87
        return x

    def __call__(self, a: int, b: int, tweak: int) -> int:
        k = self._double(a) ^ self._double(self._double(b)) ^ tweak
        out = int.from_bytes(self._enc.update(k.to_bytes(16, "big")), "big") ^ k
        return out & self.mask


def _color(label: int) -> int:
    return label & 1


def garble(seed: SharedSeed, mu_prime: int, lam: int = 128) -> tuple[GarbledComparator, Encoding]:
    if mu_prime < 1:
        raise GarbleError("mu' must be positive")
    if lam not in (80, 128):
        raise GarbleError("lambda must be 80 or 128")
    prg = PrfRandom(seed.key).fork("garble", mu_prime, lam)
    delta = prg.getrandbits(lam) | 1
    n_in = mu_prime + 1
    gen_zero = tuple(prg.getrandbits(lam) for _ in range(n_in))
    eva_zero = tuple(prg.getrandbits(lam) for _ in range(n_in))
    H = _Hasher(lam)

    # Wire 0 carries the blind; wires 1..mu' carry bits MSB-first.
    carry = delta  # zero-label of constant 1: the evaluator never holds it
    const_one = True
    rows = []
    for gate, pos in enumerate(range(mu_prime, 0, -1)):
        x0 = gen_zero[pos]
        y0 = eva_zero[pos]
        if const_one:
            # XOR with the public constant 1 flips the zero label.
            a0, b0 = x0 ^ delta, y0 ^ delta
        else:
            a0, b0 = x0 ^ carry, y0 ^ carry
        out0 = prg.getrandbits(lam)
        table = [0, 0, 0, 0]
        for va in (0, 1):
            for vb in (0, 1):
                la = a0 ^ (delta if va else 0)
                lb = b0 ^ (delta if vb else 0)
                lo = out0 ^ (delta if va & vb else 0)
                table[2 * _color(la) + _color(lb)] = H(la, lb, gate) ^ lo
        rows.append(tuple(table))
        carry = x0 ^ out0
        const_one = False
    out_zero = carry ^ gen_zero[0] ^ eva_zero[0]
    F = GarbledComparator(mu_prime, lam, tuple(rows), _color(out_zero))
    return F, Encoding(mu_prime, lam, delta, gen_zero, eva_zero)


def encode(e: Encoding, side: str, blind: int, bits: list[int]) -> tuple[int, ...]:
    """Labels for ``(blind, bits...)`` on the generator (``"gen"``) or evaluator side."""
    if side not in ("gen", "eva"):
        raise GarbleError(f"unknown side {side!r}")
    if len(bits) != e.mu_prime:
        raise GarbleError(f"expected {e.mu_prime} bits, got {len(bits)}")
    values = [blind, *bits]
    if any(v not in (0, 1) for v in values):
        raise GarbleError("inputs must be bits")
    return tuple(e.pair(side, w)[v] for w, v in enumerate(values))


def evaluate(F: GarbledComparator, gen_labels, eva_labels) -> int:
    mu = F.mu_prime
    if len(gen_labels) != mu + 1 or len(eva_labels) != mu + 1:
        raise GarbleError("garbled input width mismatch")
    H = _Hasher(F.lam)
    carry = None
    for gate, pos in enumerate(range(mu, 0, -1)):
        x = gen_labels[pos]
        y = eva_labels[pos]
        a, b = (x, y) if carry is None else (x ^ carry, y ^ carry)
        out = F.rows[gate][2 * _color(a) + _color(b)] ^ H(a, b, gate)
        carry = x ^ out
    result = carry ^ gen_labels[0] ^ eva_labels[0]
    return _color(result) ^ F.decode_bit
