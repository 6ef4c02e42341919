"""Envelope-layer measurement and the closed-form communication counts."""

from __future__ import annotations

import dataclasses
from collections import Counter
from typing import Iterable

from .core import DistinctInput, PlainInput, ProtocolConfig, head_tail_counts
from .garble import ROWS_PER_GATE
from .net.codec import count_objects
from .net.envelope import SERVER, Envelope
from .net.transport import Transcript

SCHEMA = "skre-metrics/1"
COUNTED = ("ahe", "labels", "gc_rows", "she", "sealed")


@dataclasses.dataclass
class PartyTraffic:
    bytes_up: int = 0
    bytes_down: int = 0
    messages_sent: int = 0
    sent: Counter = dataclasses.field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {
            "bytes_up": self.bytes_up,
            "bytes_down": self.bytes_down,
            "messages_sent": self.messages_sent,
            "sent": {k: self.sent[k] for k in COUNTED if self.sent[k]},
        }


def measure(transcript: Transcript, n: int) -> dict[int, PartyTraffic]:
    """Per-party traffic. Server figures include the frames it relays."""
    out = {i: PartyTraffic() for i in range(n + 1)}
    for hop in transcript.hops:
        size = len(hop.frame)
        out[hop.src].bytes_up += size
        out[hop.src].messages_sent += 1
        out[hop.dst].bytes_down += size
        env = Envelope.from_bytes(hop.frame)
        out[hop.src].sent.update(count_objects(env.payload))
    return out


def expected_counts(protocol: str, cfg: ProtocolConfig, decryptors: Iterable[int] = ()) -> dict[int, Counter]:
    """Closed-form sent counts per party for a run with no crashes.

    ``decryptors`` is the final t-subset chosen by the server (AHE-L only).
    """
    n, t, mp = cfg.n, cfg.t, cfg.mu_prime
    final = set(decryptors)
    exp: dict[int, Counter] = {}
    for i in range(1, n + 1):
        heads, tails = head_tail_counts(i, n)
        if protocol == "ygc":
            c = Counter(gc_rows=ROWS_PER_GATE * mp * heads, labels=(mp + 1) * (n - 1), ahe=3 * n - 2)
        elif protocol == "ahe-lin":
            c = Counter(ahe=2 * mp + 1 + n * mp * t + 1 + (n if i in final else 0))
        elif protocol == "ahe-dgk":
            c = Counter(ahe=1 + mp + tails * (mp + 1) + heads + t + n)
        elif protocol == "she":
            c = Counter(she=mp + 1, sealed=n)
        else:
            raise ValueError(f"unknown protocol {protocol!r}")
        exp[i] = c
    pairs = n * (n - 1) // 2
    if protocol == "ygc":
        exp[SERVER] = Counter(ahe=n * n + n)
    elif protocol == "ahe-lin":
        exp[SERVER] = Counter(ahe=2 * n * n * mp * t + n + t + n * t)
    elif protocol == "ahe-dgk":
        exp[SERVER] = Counter(ahe=(2 * mp + 1) * pairs + 2 * n * t + n)
    else:
        exp[SERVER] = Counter(she=n, sealed=n * n)
    return exp


def star_violations(transcript: Transcript) -> list[str]:
    """Hops that bypass the server, or relays whose bytes changed en route."""
    problems = []
    pending: Counter = Counter()
    for hop in transcript.hops:
        if hop.src != SERVER and hop.dst != SERVER:
            problems.append(f"direct delivery {hop.src} -> {hop.dst}")
            continue
        env = Envelope.from_bytes(hop.frame)
        if hop.src != SERVER and env.receiver != SERVER:
            pending[hop.frame] += 1
        elif hop.src == SERVER and env.sender != SERVER:
            if pending[hop.frame] <= 0:
                problems.append(f"server delivered a client frame {env.sender} -> {hop.dst} it never received")
            else:
                pending[hop.frame] -= 1
            if env.receiver != hop.dst:
                problems.append(f"relay to {hop.dst} of a frame addressed to {env.receiver}")
    return problems


def holds_plaintext_input(obj, _seen=None) -> bool:
    """True if any plaintext input object is reachable from ``obj``'s state."""
    seen = set() if _seen is None else _seen
    if id(obj) in seen:
        return False
    seen.add(id(obj))
    if isinstance(obj, (PlainInput, DistinctInput)):
        return True
    if isinstance(obj, dict):
        return any(holds_plaintext_input(k, seen) or holds_plaintext_input(v, seen) for k, v in obj.items())
    if isinstance(obj, (list, tuple, set, frozenset)):
        return any(holds_plaintext_input(v, seen) for v in obj)
    if hasattr(obj, "__dict__") and not isinstance(obj, type):
        return any(holds_plaintext_input(v, seen) for v in vars(obj).values())
    return False


def build_metrics(result) -> dict:
    """Metrics record for a finished run (``proto.RunResult``)."""
    cfg = result.cfg
    traffic = measure(result.transcript, cfg.n)
    expected = expected_counts(result.protocol, cfg, getattr(result.server, "decryptors", ()))
    parties = {}
    match = True
    for i, tr in traffic.items():
        d = tr.as_dict()
        d["expected"] = {k: expected[i][k] for k in COUNTED if expected[i][k]}
        match = match and d["sent"] == d["expected"]
        parties[str(i)] = d
    clients = [traffic[i] for i in range(1, cfg.n + 1)]
    return {
        "schema": SCHEMA,
        "protocol": result.protocol,
        "n": cfg.n,
        "k": cfg.k,
        "t": cfg.t,
        "mu": cfg.mu,
        "mu_prime": cfg.mu_prime,
        "seed": cfg.seed,
        "rounds": result.rounds,
        "aborted": result.aborted,
        "outputs": {str(i): v for i, v in sorted(result.outputs.items())},
        "transcript_sha256": result.transcript.digest(),
        "client_bytes": sum(c.bytes_up for c in clients),
        "server_bytes": traffic[SERVER].bytes_up,
        "parties": parties,
        "counts_match": bool(match) and result.aborted is None,
        "gc_rows_per_gate": ROWS_PER_GATE if result.protocol == "ygc" else None,
        "wall_time_s": round(result.wall_time, 6),
    }


def comparable(metrics: dict) -> dict:
    """Metrics minus the fields that legitimately vary between identical runs."""
    return {k: v for k, v in metrics.items() if k != "wall_time_s"}
