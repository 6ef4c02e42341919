"""Wire envelope shared by every transport.

Layout (big-endian)::

    magic "SKRE" | version u8 | protocol u16 | session u64 | round u16 |
    sender u32 | receiver u32 | length u64 | payload

Party 0 is the server.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = b"SKRE"
VERSION = 1
MAX_PAYLOAD = 64 * 1024 * 1024
SERVER = 0

PROTOCOL_IDS = {"ygc": 1, "ahe-lin": 2, "ahe-dgk": 3, "she": 4}
PROTOCOL_NAMES = {v: k for k, v in PROTOCOL_IDS.items()}

HEADER = struct.Struct(">4sBHQHIIQ")
HEADER_SIZE = HEADER.size


class EnvelopeError(ValueError):
    pass


class FrameTooLarge(EnvelopeError):
    pass


@dataclass(frozen=True)
class Envelope:
    protocol: int
    session: int
    round: int
    sender: int
    receiver: int
    payload: bytes

    def to_bytes(self) -> bytes:
        if self.protocol not in PROTOCOL_NAMES:
            raise EnvelopeError(f"unknown protocol id {self.protocol}")
        if len(self.payload) > MAX_PAYLOAD:
            raise FrameTooLarge(f"payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD}")
        head = HEADER.pack(
            MAGIC, VERSION, self.protocol, self.session, self.round,
            self.sender, self.receiver, len(self.payload),
        )
        return head + self.payload

    @classmethod
    def from_bytes(cls, data: bytes, n: int | None = None) -> "Envelope":
        if len(data) < HEADER_SIZE:
            raise EnvelopeError("truncated envelope header")
        magic, version, proto, session, rnd, sender, receiver, length = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise EnvelopeError("bad magic")
        if version != VERSION:
            raise EnvelopeError(f"unsupported envelope version {version}")
        if proto not in PROTOCOL_NAMES:
            raise EnvelopeError(f"unknown protocol id {proto}")
        if length > MAX_PAYLOAD:
            raise FrameTooLarge(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
        if len(data) - HEADER_SIZE != length:
            raise EnvelopeError("payload length mismatch")
        env = cls(proto, session, rnd, sender, receiver, bytes(data[HEADER_SIZE:]))
        if n is not None and (sender > n or receiver > n):
            raise EnvelopeError(f"party index out of range for n={n}")
        return env


def peek_header(data: bytes) -> tuple[int, int, int, int, int, int]:
    """(protocol, session, round, sender, receiver, length) without copying the payload."""
    magic, version, proto, session, rnd, sender, receiver, length = HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise EnvelopeError("bad envelope header")
    return proto, session, rnd, sender, receiver, length
