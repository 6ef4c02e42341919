"""Session setup: identifiers and the test-mode trusted dealer.

The dealer produces threshold key material out of band. It is a plain
function that runs before any transport exists, so it never appears in an
envelope. Personal keys and DH values are generated by the clients
themselves and exchanged through the server in round 0.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .. import aheg, she
from ..aheg import KeyShare, PublicKey
from ..core import ProtocolConfig
from ..group import Group
from ..rng import PrfRandom
from .envelope import PROTOCOL_IDS

THRESHOLD_PROTOCOLS = ("ahe-lin", "ahe-dgk")


@dataclass(frozen=True)
class ClientKeys:
    index: int
    common_pk: PublicKey | None = None
    ahe_share: KeyShare | None = None
    she_ctx: she.SheContext | None = None
    she_share: she.SheKeyShare | None = None


@dataclass(frozen=True)
class ServerKeys:
    common_pk: PublicKey | None = None
    she_ctx: she.SheContext | None = None


@dataclass(frozen=True)
class SessionSetup:
    protocol: str
    session_id: int
    server: ServerKeys
    clients: dict[int, ClientKeys]

    def installed(self) -> dict[str, int]:
        """How many items of each kind the dealer handed out."""
        return {
            "threshold_shares": sum(
                1 for k in self.clients.values() if k.ahe_share is not None or k.she_share is not None
            ),
            "public_contexts": 1 + len(self.clients),
        }


def session_id_for(protocol: str, rng: PrfRandom) -> int:
    digest = hashlib.blake2b(rng.fork("session", protocol).randbytes(16), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def trusted_dealer(protocol: str, cfg: ProtocolConfig, group: Group, rng: PrfRandom):
    if protocol not in PROTOCOL_IDS:
        raise ValueError(f"unknown protocol {protocol!r}")
    drng = rng.fork("dealer", protocol)
    if protocol in THRESHOLD_PROTOCOLS:
        pk, shares = aheg.threshold_keygen(group, cfg.n, cfg.t, drng)
        clients = {s.index: ClientKeys(s.index, pk, s) for s in shares}
        return ServerKeys(common_pk=pk), clients
    if protocol == "she":
        params = she.SheParams(she.default_slots(cfg.mu_prime))
        ctx, shares = she.she_keygen(params, cfg.n, drng)
        clients = {s.index: ClientKeys(s.index, she_ctx=ctx, she_share=s) for s in shares}
        return ServerKeys(she_ctx=ctx), clients
    return ServerKeys(), {i: ClientKeys(i) for i in range(1, cfg.n + 1)}


def setup_session(protocol: str, cfg: ProtocolConfig, group: Group, rng: PrfRandom) -> SessionSetup:
    server, clients = trusted_dealer(protocol, cfg, group, rng)
    return SessionSetup(protocol, session_id_for(protocol, rng), server, clients)
