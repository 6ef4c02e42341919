"""Distribution of permuted rows to partial decryptors.

Logical rows and positions are 1-based. Logical row ``j`` is combined by
position ``j`` and partially decrypted by positions ``j, j+1, ..., j+t-1``
(mod n). Equivalently, position ``i`` receives rows ``i-t+1, ..., i``.
Positions map to party indexes through the live roster.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


def wrap(j: int, n: int) -> int:
    return (j - 1) % n + 1


def request_rows(i: int, n: int, t: int) -> list[int]:
    if not 1 <= i <= n:
        raise ValueError(f"position {i} outside [1, {n}]")
    if not 1 <= t <= n:
        raise ValueError(f"t={t} outside [1, {n}]")
    return [wrap(i - t + u, n) for u in range(1, t + 1)]


def row_decryptors(j: int, n: int, t: int) -> list[int]:
    return [wrap(j + u, n) for u in range(t)]


@dataclass(frozen=True)
class DecryptionRequest:
    client: int
    rows: tuple[int, ...]  # logical row numbers
    source_rows: tuple[int, ...]  # pi(j), the original row behind each logical row
    combiners: tuple[int, ...]
    entries: tuple


def dec_req(G: Sequence[Sequence], i: int, t: int, pi: Sequence[int]) -> DecryptionRequest:
    """Rows ``pi(j)`` of ``G`` for ``j`` in ``i-t+1 .. i`` (mod n).

    ``pi[j-1]`` is the 1-based original row shown as logical row ``j``.
    """
    n = len(G)
    if len(pi) != n or sorted(pi) != list(range(1, n + 1)):
        raise ValueError("pi must be a permutation of 1..n")
    width = {len(row) for row in G}
    if len(width) > 1:
        raise ValueError("malformed matrix: ragged rows")
    rows = tuple(request_rows(i, n, t))
    src = tuple(pi[j - 1] for j in rows)
    return DecryptionRequest(i, rows, src, rows, tuple(tuple(G[s - 1]) for s in src))


def assignment(n: int, t: int) -> dict[int, tuple[list[int], int]]:
    """Logical row -> (decryptor positions, combiner position)."""
    return {j: (row_decryptors(j, n, t), j) for j in range(1, n + 1)}
