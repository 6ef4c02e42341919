"""Shared plumbing for the client and server state machines.

Every handler is keyed by the payload's ``type`` field. Party randomness
is drawn from labelled forks of a per-party stream, so the bytes a party
emits do not depend on the order in which other parties' messages arrive.
"""

from __future__ import annotations

import logging

from .. import aheg
from ..core import DistinctInput, PlainInput, ProtocolConfig, make_distinct
from ..group import Group
from ..net.codec import Codec
from ..net.envelope import PROTOCOL_IDS, SERVER, Envelope
from ..net.session import ClientKeys, ServerKeys
from ..rng import PrfRandom

log = logging.getLogger(__name__)


class Abort(RuntimeError):
    """The session cannot complete."""


class ProtocolViolation(Abort):
    pass


class Party:
    protocol: str = ""

    def __init__(self, cfg: ProtocolConfig, session: int, index: int, group: Group, codec: Codec, rng: PrfRandom):
        self.cfg = cfg
        self.session = session
        self.index = index
        self.group = group
        self.codec = codec
        self.rng = rng
        self.round = 0
        self.finished = False
        self.aborted: str | None = None

    @property
    def protocol_id(self) -> int:
        return PROTOCOL_IDS[self.protocol]

    def env(self, receiver: int, rnd: int, payload: dict) -> Envelope:
        self.round = max(self.round, rnd)
        return Envelope(self.protocol_id, self.session, rnd, self.index, receiver, self.codec.dumps(payload))

    def receive(self, env: Envelope) -> list[Envelope]:
        if self.finished:
            return []
        self.round = max(self.round, env.round)
        try:
            payload = self.codec.loads(env.payload)
            kind = payload["type"]
        except Exception as exc:  # malformed payload aborts the session
            return self.fail(f"malformed payload from {env.sender}: {exc}")
        if kind in ("error", "abort"):
            return self.fail(f"{kind} from {env.sender}: {payload.get('reason')}")
        handler = getattr(self, "on_" + kind, None)
        if handler is None:
            return self.fail(f"unexpected message type {kind!r} from {env.sender}")
        try:
            return handler(env.sender, env.round, payload) or []
        except Abort as exc:
            return self.fail(str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            return self.fail(f"bad {kind!r} message from {env.sender}: {exc}")

    def fail(self, reason: str) -> list[Envelope]:
        log.info("party %d aborting: %s", self.index, reason)
        self.aborted = reason
        self.finished = True
        return []


class ClientBase(Party):
    uses_dh = False

    def __init__(self, cfg, session, index, group, codec, rng, value: int, keys: ClientKeys):
        super().__init__(cfg, session, index, group, codec, rng)
        self.input = PlainInput(value, index, cfg.mu)
        self.distinct: DistinctInput = make_distinct(self.input, cfg.n)
        self.keys = keys
        self.personal = aheg.keygen(group, rng.fork("personal"))
        self.dh = aheg.keygen(group, rng.fork("dh")) if self.uses_dh else None
        self.pks: dict[int, aheg.PublicKey] = {}
        self.dh_pubs: dict[int, aheg.PublicKey] = {}
        self.roster: list[int] = []
        self.result: int | None = None

    @property
    def value_bound(self) -> int:
        return 1 << self.cfg.mu_prime

    def start(self) -> list[Envelope]:
        payload = {"type": "register", "pk": self.personal.pk}
        if self.dh is not None:
            payload["dh"] = self.dh.pk
        return [self.env(SERVER, 0, payload)]

    def on_directory(self, sender, rnd, p):
        self.pks = dict(p["pks"])
        self.dh_pubs = dict(p.get("dh", {}))
        self.roster = list(p["live"])
        return self.round1()

    def round1(self) -> list[Envelope]:
        raise NotImplementedError

    def finish(self, value: int) -> list[Envelope]:
        self.result = value
        self.finished = True
        return []

    def decode(self, point) -> int:
        v = aheg.decode_bounded(self.group, point, self.value_bound)
        if v is None:
            raise Abort("final result is not decodable")
        return v


class ServerBase(Party):
    """Registration, roster management and phase bookkeeping."""

    fault_tolerant = False

    def __init__(self, cfg, session, group, codec, rng, keys: ServerKeys):
        super().__init__(cfg, session, SERVER, group, codec, rng)
        self.keys = keys
        self.pks: dict[int, aheg.PublicKey] = {}
        self.dh_pubs: dict[int, aheg.PublicKey] = {}
        self.live: list[int] = list(range(1, cfg.n + 1))
        self.phase = "register"
        self.awaiting: set[int] = set(self.live)
        self.rounds_completed = 0

    def start(self) -> list[Envelope]:
        return []

    # Phase bookkeeping
    def expect(self, phase: str, senders) -> None:
        self.phase = phase
        self.awaiting = set(senders)

    def arrived(self, phase: str, sender: int) -> bool:
        """Record one expected message; True once the phase is complete."""
        if self.phase != phase:
            raise ProtocolViolation(f"{phase!r} message from {sender} during phase {self.phase!r}")
        if sender not in self.awaiting:
            raise ProtocolViolation(f"unexpected or duplicate {phase!r} message from {sender}")
        self.awaiting.discard(sender)
        return not self.awaiting

    def broadcast(self, rnd: int, payload_for) -> list[Envelope]:
        return [self.env(i, rnd, payload_for(i)) for i in self.live]

    def on_register(self, sender, rnd, p):
        if sender in self.pks:
            # Duplicate registration is refused without aborting the session.
            return [self.env(sender, 0, {"type": "error", "reason": "duplicate registration"})]
        if self.phase != "register":
            raise ProtocolViolation("registration after setup")
        self.pks[sender] = p["pk"]
        if "dh" in p:
            self.dh_pubs[sender] = p["dh"]
        if not self.arrived("register", sender):
            return []
        self.expect("upload", self.live)
        directory = {"type": "directory", "pks": self.pks, "live": self.live}
        if self.dh_pubs:
            directory["dh"] = self.dh_pubs
        return self.broadcast(0, lambda i: directory)

    def receive(self, env: Envelope) -> list[Envelope]:
        if self.finished:
            return []
        self.round = max(self.round, env.round)
        try:
            payload = self.codec.loads(env.payload)
            kind = payload["type"]
        except Exception as exc:  # undecodable input is fatal for the session
            return self.abort(f"malformed payload from {env.sender}: {exc}")
        try:
            if kind in ("error", "abort"):
                raise Abort(f"client {env.sender} reported: {payload.get('reason')}")
            handler = getattr(self, "on_" + kind, None)
            if handler is None:
                raise ProtocolViolation(f"unexpected message type {kind!r} from {env.sender}")
            return handler(env.sender, env.round, payload) or []
        except Abort as exc:
            return self.abort(str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            return self.abort(f"malformed payload from {env.sender}: {exc}")

    def abort(self, reason: str) -> list[Envelope]:
        log.info("server aborting: %s", reason)
        outs = [self.env(i, self.round, {"type": "abort", "reason": reason}) for i in self.live]
        self.aborted = reason
        self.finished = True
        return outs

    def drop(self, dead) -> list[Envelope]:
        dead = set(dead)
        if not dead:
            return []
        if self.phase != "upload" or not self.fault_tolerant:
            self.live = [i for i in self.live if i not in dead]
            return self.abort(f"client(s) {sorted(dead)} failed during phase {self.phase!r}")
        self.live = [i for i in self.live if i not in dead]
        self.awaiting -= dead
        n_live = len(self.live)
        if n_live < max(self.cfg.t, 2):
            return self.abort(f"threshold failure: {n_live} live clients, need {max(self.cfg.t, 2)}")
        if self.cfg.k > n_live:
            return self.abort(f"k={self.cfg.k} exceeds the {n_live} live clients")
        if not self.awaiting:
            return self.after_upload()
        return []

    def lost(self, i: int) -> list[Envelope]:
        if self.finished or i not in self.live:
            return []
        if self.phase == "register":
            return self.abort(f"client {i} disconnected during setup")
        if self.phase == "upload" and i not in self.awaiting:
            # Already uploaded; losing it later is fatal only once we need it again.
            self.live = [j for j in self.live if j != i]
            return self.abort(f"client {i} disconnected after its upload")
        return self.drop({i})

    def stall(self) -> list[Envelope]:
        if self.finished:
            return []
        if self.phase == "register":
            return self.abort(f"only {len(self.pks)} of {self.cfg.n} clients registered")
        if not self.awaiting:
            return self.abort(f"stalled in phase {self.phase!r}")
        return self.drop(self.awaiting)

    def after_upload(self) -> list[Envelope]:
        raise NotImplementedError

    def done(self) -> None:
        self.finished = True
