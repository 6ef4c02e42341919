"""Plaintext domain logic and the ground-truth oracle.

Bit vectors are most-significant-bit first throughout: position 0 of a
vector holds bit number ``mu'`` and the last position holds bit 1.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

SECURITY_LEVELS = (80, 128)


class ConfigError(ValueError):
    """Protocol parameters violate an invariant."""


def index_bits(n: int) -> int:
    """Number of low bits used to disambiguate ``n`` party indexes."""
    return math.ceil(math.log2(n)) if n > 1 else 0


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    k: int
    t: int
    mu: int
    lam: int = 128
    seed: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"need at least 2 clients, got n={self.n}")
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"k={self.k} outside [1, {self.n}]")
        if not 1 <= self.t <= self.n:
            raise ConfigError(f"t={self.t} outside [1, {self.n}]")
        if self.mu < 1:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if self.lam not in SECURITY_LEVELS:
            raise ConfigError(f"lambda must be one of {SECURITY_LEVELS}")

    @property
    def mu_prime(self) -> int:
        return self.mu + index_bits(self.n)

    @property
    def rank_bits(self) -> int:
        """Width of a rank in [1..n]."""
        return self.n.bit_length()


@dataclass(frozen=True)
class PlainInput:
    value: int
    index: int
    mu: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.mu):
            raise ConfigError(f"value {self.value} does not fit in {self.mu} bits")
        if self.index < 1:
            raise ConfigError(f"party index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class DistinctInput:
    value: int
    bitlength: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.bitlength):
            raise ConfigError(f"{self.value} does not fit in {self.bitlength} bits")

    @property
    def bits(self) -> list[int]:
        return to_bits(self.value, self.bitlength)


def make_distinct(x: PlainInput, n: int) -> DistinctInput:
    """Append ``index - 1`` in the low ``ceil(log2 n)`` bits."""
    if not 1 <= x.index <= n:
        raise ConfigError(f"index {x.index} outside [1, {n}]")
    shift = index_bits(n)
    return DistinctInput((x.value << shift) | (x.index - 1), x.mu + shift)


def strip_index(value: int, n: int) -> int:
    return value >> index_bits(n)


def to_bits(value: int, width: int) -> list[int]:
    """MSB-first bit list of exactly ``width`` entries."""
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return [(value >> (width - 1 - p)) & 1 for p in range(width)]


def from_bits(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | (b & 1)
    return out


def paired(i: int, j: int) -> bool:
    """Whether ``i`` is the head of the comparison between ``i`` and ``j``."""
    if i == j:
        raise ValueError("paired is undefined for i == j")
    if i < 1 or j < 1:
        raise ValueError("party indexes start at 1")
    i_odd, j_odd = i % 2 == 1, j % 2 == 1
    return (
        (i_odd and i > j and j_odd)
        or (i_odd and i < j and not j_odd)
        or (not i_odd and i > j and not j_odd)
        or (not i_odd and i < j and j_odd)
    )


def head_pairs(n: int) -> list[tuple[int, int]]:
    """All (head, tail) pairs for n parties, ordered by (min, max) index."""
    out = []
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            out.append((a, b) if paired(a, b) else (b, a))
    return out


def head_tail_counts(i: int, n: int) -> tuple[int, int]:
    if not 1 <= i <= n:
        raise ValueError(f"index {i} outside [1, {n}]")
    if n % 2 == 1:
        return (n - 1) // 2, (n - 1) // 2
    if i % 2 == 1:
        return n // 2, n // 2 - 1
    return n // 2 - 1, n // 2


@dataclass(frozen=True)
class ZeroOneEncoding:
    v0: tuple[int, ...]
    v1: tuple[int, ...]
    proper0: tuple[bool, ...] = field(default=())
    proper1: tuple[bool, ...] = field(default=())

    @property
    def width(self) -> int:
        return len(self.v0)


def _random_element(width: int, lsb: int, rng: random.Random) -> int:
    r = (1 << width) | rng.getrandbits(width)
    return (r & ~1) | lsb


def encode_zero_one(x: DistinctInput, rng: random.Random) -> ZeroOneEncoding:
    """0-encoding and 1-encoding of ``x`` (MSB-first positions).

    Proper elements are prefixes of ``x`` read as integers; random elements
    live one bit above every proper element and carry a fixed LSB so a
    random 1-encoding element never matches a 0-encoding element.
    """
    width = x.bitlength
    bits = x.bits
    v0, v1, p0, p1 = [], [], [], []
    for pos, bit in enumerate(bits):
        prefix = from_bits(bits[:pos])
        if bit == 0:
            v0.append((prefix << 1) | 1)
            p0.append(True)
            v1.append(_random_element(width, 1, rng))
            p1.append(False)
        else:
            v0.append(_random_element(width, 0, rng))
            p0.append(False)
            v1.append((prefix << 1) | 1)
            p1.append(True)
    return ZeroOneEncoding(tuple(v0), tuple(v1), tuple(p0), tuple(p1))


def kre_oracle(values: Sequence[PlainInput], k: int, n: int | None = None) -> int:
    """Brute-force k-th ranked element after index disambiguation.

    ``n`` is the session size when ``values`` only holds the survivors.
    """
    if not values:
        raise ValueError("empty input")
    if not 1 <= k <= len(values):
        raise ValueError(f"k={k} outside [1, {len(values)}]")
    n = len(values) if n is None else n
    ordered = sorted(values, key=lambda x: make_distinct(x, n).value)
    return ordered[k - 1].value


def comparison_bit(a: int, b: int) -> int:
    return int(a >= b)


def rank_from_bits(row: Sequence[int], self_index: int | None = None) -> int:
    if not row:
        raise ValueError("empty rank row")
    if any(b not in (0, 1) for b in row):
        raise ValueError("rank row must contain bits")
    if self_index is not None and row[self_index - 1] != 1:
        raise ValueError("diagonal comparison bit must be 1")
    return sum(row)


def rank_table(values: Sequence[int]) -> list[list[int]]:
    """Pairwise comparison bits b_ij = [x_i >= x_j]."""
    return [[comparison_bit(a, b) for b in values] for a in values]
