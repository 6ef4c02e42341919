"""CBOR payload codec with tags for the cryptographic object types.

Tagging every ciphertext-like object lets the metrics layer count
ciphertexts straight from envelope bytes, without any key material.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import cbor2

from ..aheg import Ciphertext, PublicKey, SealedBox
from ..garble import HEADER as GC_HEADER, ROWS_PER_GATE, GarbledComparator
from ..group import Group
from ..she import SheContext, SlotCiphertext

TAG_AHE = 40001
TAG_POINT = 40002
TAG_LABELS = 40003
TAG_GC = 40004
TAG_SHE = 40005
TAG_SEALED = 40006


@dataclass(frozen=True)
class GarbledInput:
    """Wire labels of one party's input to one garbled comparator."""

    labels: tuple[int, ...]
    lam: int

    def to_bytes(self) -> bytes:
        w = self.lam // 8
        return b"".join(v.to_bytes(w, "big") for v in self.labels)

    @classmethod
    def from_bytes(cls, lam: int, data: bytes) -> "GarbledInput":
        w = lam // 8
        if len(data) % w:
            raise ValueError("label blob is not a whole number of labels")
        return cls(tuple(int.from_bytes(data[o : o + w], "big") for o in range(0, len(data), w)), lam)


class Codec:
    def __init__(self, group: Group, she_ctx: SheContext | None = None):
        self.group = group
        self.she_ctx = she_ctx

    def _default(self, encoder, value):
        if isinstance(value, Ciphertext):
            encoder.encode(cbor2.CBORTag(TAG_AHE, value.to_bytes()))
        elif isinstance(value, PublicKey):
            encoder.encode(cbor2.CBORTag(TAG_POINT, value.to_bytes()))
        elif isinstance(value, GarbledInput):
            encoder.encode(cbor2.CBORTag(TAG_LABELS, [value.lam, value.to_bytes()]))
        elif isinstance(value, GarbledComparator):
            encoder.encode(cbor2.CBORTag(TAG_GC, value.to_bytes()))
        elif isinstance(value, SlotCiphertext):
            encoder.encode(cbor2.CBORTag(TAG_SHE, value.to_bytes()))
        elif isinstance(value, SealedBox):
            encoder.encode(cbor2.CBORTag(TAG_SEALED, value.to_bytes()))
        else:
            raise TypeError(f"cannot serialise {type(value).__name__}")

    def _tag_hook(self, *args):
        # cbor2 5.x passes (decoder, tag); 6.x passes (tag, immutable)
        tag = next(a for a in args if isinstance(a, cbor2.CBORTag))
        v = tag.value
        if tag.tag == TAG_AHE:
            return Ciphertext.from_bytes(self.group, v)
        if tag.tag == TAG_POINT:
            return PublicKey.from_bytes(self.group, v)
        if tag.tag == TAG_LABELS:
            return GarbledInput.from_bytes(v[0], v[1])
        if tag.tag == TAG_GC:
            return GarbledComparator.from_bytes(v)
        if tag.tag == TAG_SHE:
            if self.she_ctx is None:
                raise ValueError("SHE ciphertext received without an SHE context")
            return SlotCiphertext.from_bytes(self.she_ctx, v)
        if tag.tag == TAG_SEALED:
            return SealedBox.from_bytes(self.group, v)
        return tag

    def dumps(self, obj) -> bytes:
        return cbor2.dumps(obj, default=self._default, canonical=True)

    def loads(self, data: bytes):
        return cbor2.loads(data, tag_hook=self._tag_hook)


COUNT_KEYS = ("ahe", "points", "labels", "gc_rows", "she", "sealed")


def count_objects(payload: bytes) -> Counter:
    """Count tagged objects in an encoded payload (no key material needed)."""
    counts: Counter = Counter()

    def hook(*args):
        tag = next(a for a in args if isinstance(a, cbor2.CBORTag))
        if tag.tag == TAG_AHE:
            counts["ahe"] += 1
        elif tag.tag == TAG_POINT:
            counts["points"] += 1
        elif tag.tag == TAG_LABELS:
            counts["labels"] += len(tag.value[1]) // (tag.value[0] // 8)
        elif tag.tag == TAG_GC:
            gates = GC_HEADER.unpack_from(tag.value)[2]
            counts["gc_rows"] += ROWS_PER_GATE * gates
        elif tag.tag == TAG_SHE:
            counts["she"] += 1
        elif tag.tag == TAG_SEALED:
            counts["sealed"] += 1
        return None

    cbor2.loads(payload, tag_hook=hook)
    return counts
