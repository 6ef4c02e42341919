"""Wire a full session together over loopback or local TCP."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..core import ConfigError, ProtocolConfig
from ..group import Group, get_group
from ..net.codec import Codec
from ..net.envelope import PROTOCOL_IDS
from ..net.session import SessionSetup, setup_session
from ..net.transport import LoopbackNetwork, Router, TcpServer, Transcript, run_tcp_client
from ..rng import make_rng
from .ahe_dgk import AheDgkClient, AheDgkServer
from .ahe_lin import AheLinClient, AheLinServer
from .she_proto import SheClient, SheServer
from .ygc import YgcClient, YgcServer

PROTOCOLS = {
    "ygc": (YgcClient, YgcServer),
    "ahe-lin": (AheLinClient, AheLinServer),
    "ahe-dgk": (AheDgkClient, AheDgkServer),
    "she": (SheClient, SheServer),
}


def effective_config(protocol: str, cfg: ProtocolConfig) -> ProtocolConfig:
    """The SHE backend shares its key n-out-of-n, so t is pinned to n."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")
    if protocol == "she" and cfg.t != cfg.n:
        return ProtocolConfig(cfg.n, cfg.k, cfg.n, cfg.mu, cfg.lam, cfg.seed)
    return cfg


class CrashedClient:
    """Registers, then goes silent: models a client that dies before uploading."""

    def __init__(self, inner):
        self.inner = inner
        self.index = inner.index
        self.finished = False
        self.result = None
        self.aborted = None

    def start(self):
        return self.inner.start()

    def receive(self, env):
        self.finished = True
        return []


@dataclass
class RunResult:
    protocol: str
    cfg: ProtocolConfig
    outputs: dict[int, int | None]
    aborted: str | None
    transcript: Transcript
    server: object
    clients: dict
    setup: SessionSetup
    wall_time: float = 0.0
    client_errors: dict[int, str] = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return max((env.round for _, env in self.transcript.envelopes()), default=0)

    @property
    def ok(self) -> bool:
        return self.aborted is None and all(v is not None for v in self.outputs.values())


def build_parties(protocol: str, cfg: ProtocolConfig, inputs: Sequence[int], group: Group | None = None):
    cfg = effective_config(protocol, cfg)
    if len(inputs) != cfg.n:
        raise ConfigError(f"expected {cfg.n} inputs, got {len(inputs)}")
    for v in inputs:
        if not 0 <= v < 1 << cfg.mu:
            raise ConfigError(f"input {v} does not fit in mu={cfg.mu} bits")
    group = group or get_group()
    rng = make_rng(cfg.seed if cfg.seed is not None else None)
    setup = setup_session(protocol, cfg, group, rng)
    codec = Codec(group, setup.server.she_ctx)
    client_cls, server_cls = PROTOCOLS[protocol]
    server = server_cls(cfg, setup.session_id, group, codec, rng.fork("server"), setup.server)
    clients = {
        i: client_cls(cfg, setup.session_id, i, group, codec, rng.fork("client", i), inputs[i - 1], setup.clients[i])
        for i in range(1, cfg.n + 1)
    }
    return cfg, setup, server, clients, rng


def run_protocol(
    protocol: str,
    cfg: ProtocolConfig,
    inputs: Sequence[int],
    transport: str = "loopback",
    crash: set[int] | frozenset = frozenset(),
    group: Group | None = None,
    timeout: float = 5.0,
    on_server_step: Callable[[object], None] | None = None,
) -> RunResult:
    """Run one session. ``on_server_step(server)`` runs after every server event."""
    cfg, setup, server, clients, rng = build_parties(protocol, cfg, inputs, group)
    if on_server_step is not None:
        _observe(server, on_server_step)
    parties = {i: CrashedClient(c) if i in crash else c for i, c in clients.items()}
    router = Router(server, cfg.n, PROTOCOL_IDS[protocol], setup.session_id)
    errors: dict[int, str] = {}
    t0 = time.perf_counter()
    if transport == "loopback":
        seed = rng.fork("schedule").getrandbits(64)
        transcript = LoopbackNetwork(router, parties, seed).run()
    elif transport == "tcp":
        tcp = TcpServer(router, cfg.n, timeout=timeout)

        def client_main(i, party):
            try:
                if isinstance(party, CrashedClient):
                    _run_crashed(party, tcp.address, timeout)
                else:
                    run_tcp_client(party, tcp.address, timeout=max(timeout, 60.0))
            except Exception as exc:  # reported through RunResult
                errors[i] = f"{type(exc).__name__}: {exc}"

        threads = [threading.Thread(target=client_main, args=(i, p), daemon=True) for i, p in parties.items()]
        for th in threads:
            th.start()
        transcript = tcp.serve()
        for th in threads:
            th.join(timeout)
    else:
        raise ConfigError(f"unknown transport {transport!r}")
    wall = time.perf_counter() - t0
    outputs = {
        i: (None if i in crash or c.aborted else c.result) for i, c in clients.items()
    }
    aborted = server.aborted
    if aborted is None:
        bad = [c.aborted for i, c in clients.items() if i not in crash and c.aborted]
        aborted = bad[0] if bad else None
    return RunResult(protocol, cfg, outputs, aborted, transcript, server, clients, setup, wall, errors)


def _observe(server, hook) -> None:
    for name in ("receive", "lost", "stall"):
        inner = getattr(server, name)

        def wrapped(*a, _inner=inner):
            out = _inner(*a)
            hook(server)
            return out

        setattr(server, name, wrapped)


def _run_crashed(party: CrashedClient, addr, timeout: float) -> None:
    import socket

    from ..net.envelope import Envelope
    from ..net.transport import recv_frame, send_frame

    with socket.create_connection(addr, timeout=timeout) as sock:
        for env in party.start():
            send_frame(sock, env.to_bytes())
        frame = recv_frame(sock)
        if frame is not None:
            party.receive(Envelope.from_bytes(frame))
