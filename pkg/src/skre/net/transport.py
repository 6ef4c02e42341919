"""Star-network routing plus loopback and TCP transports.

Clients only ever talk to the server. An envelope addressed to another
client is forwarded by the :class:`Router` byte-for-byte; envelopes
addressed to the server go to the server's state machine.

Parties plug in through a small duck-typed interface:

* ``index``: 0 for the server, 1..n for clients
* ``start() -> list[Envelope]``
* ``receive(env) -> list[Envelope]``
* ``finished``: bool
* server only: ``lost(i)`` and ``stall()`` returning envelopes, called when a
  client disconnects or when nothing is in flight but the run is not done.
"""

from __future__ import annotations

import hashlib
import logging
import queue
import random
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import cbor2

from .envelope import HEADER_SIZE, MAX_PAYLOAD, SERVER, Envelope, EnvelopeError, FrameTooLarge

log = logging.getLogger(__name__)

ERROR_TYPE = "error"
_FRAME_PREFIX = struct.Struct(">Q")
MAX_FRAME = HEADER_SIZE + MAX_PAYLOAD


class TransportError(RuntimeError):
    pass


class Deadlock(TransportError):
    pass


@dataclass(frozen=True)
class Hop:
    src: int
    dst: int
    frame: bytes


@dataclass
class Transcript:
    hops: list[Hop] = field(default_factory=list)

    def add(self, src: int, dst: int, frame: bytes) -> None:
        self.hops.append(Hop(src, dst, frame))

    def digest(self) -> str:
        """Order-independent hash over the multiset of hops."""
        h = hashlib.sha256()
        for hop in sorted(self.hops, key=lambda x: (x.src, x.dst, x.frame)):
            h.update(struct.pack(">IIQ", hop.src, hop.dst, len(hop.frame)))
            h.update(hop.frame)
        return h.hexdigest()

    def envelopes(self):
        for hop in self.hops:
            yield hop, Envelope.from_bytes(hop.frame)


def error_envelope(env: Envelope, reason: str) -> Envelope:
    payload = cbor2.dumps({"type": ERROR_TYPE, "reason": reason}, canonical=True)
    return Envelope(env.protocol, env.session, env.round, SERVER, env.sender, payload)


class Router:
    """Server-side routing core; one instance per session, not thread-safe."""

    def __init__(self, server, n: int, protocol: int, session: int):
        self.server = server
        self.n = n
        self.protocol = protocol
        self.session = session
        self.dead: set[int] = set()
        self.relayed = 0

    def start(self) -> list[tuple[int, bytes]]:
        return self._emit(self.server.start())

    def _emit(self, envs) -> list[tuple[int, bytes]]:
        out = []
        for e in envs:
            if e.receiver in self.dead:
                continue
            out.append((e.receiver, e.to_bytes()))
        return out

    def ingest(self, frame: bytes, link: int) -> list[tuple[int, bytes]]:
        try:
            env = Envelope.from_bytes(frame)
        except EnvelopeError as exc:
            log.warning("dropping malformed frame from %d: %s", link, exc)
            return []
        if env.sender != link:
            return [(link, error_envelope(env, "sender does not match connection").to_bytes())]
        if env.session != self.session or env.protocol != self.protocol:
            return [(link, error_envelope(env, "unknown session").to_bytes())]
        if env.receiver == SERVER:
            return self._emit(self.server.receive(env))
        if env.receiver > self.n or env.receiver in self.dead:
            return [(link, error_envelope(env, f"unknown receiver {env.receiver}").to_bytes())]
        self.relayed += 1
        return [(env.receiver, frame)]

    def lost(self, i: int) -> list[tuple[int, bytes]]:
        self.dead.add(i)
        return self._emit(self.server.lost(i))

    def stall(self) -> list[tuple[int, bytes]]:
        return self._emit(self.server.stall())


class LoopbackNetwork:
    """In-process star network with per-link FIFO and seeded interleaving."""

    def __init__(self, router: Router, clients: dict, seed: int = 0, max_steps: int = 10_000_000):
        self.router = router
        self.clients = clients
        self.rng = random.Random(seed)
        self.max_steps = max_steps
        self.transcript = Transcript()
        self.queues: dict[tuple[int, int], deque] = {}

    def _push(self, src: int, dst: int, frame: bytes) -> None:
        if len(frame) > MAX_FRAME:
            raise FrameTooLarge("frame exceeds the 64 MiB cap")
        self.queues.setdefault((src, dst), deque()).append(frame)

    def _done(self) -> bool:
        return self.router.server.finished and all(c.finished for c in self.clients.values())

    def run(self) -> Transcript:
        for dst, frame in self.router.start():
            self._push(SERVER, dst, frame)
        for i in sorted(self.clients):
            for env in self.clients[i].start():
                self._push(i, SERVER, env.to_bytes())
        for _ in range(self.max_steps):
            links = sorted(k for k, q in self.queues.items() if q)
            if not links:
                if self._done():
                    return self.transcript
                outs = self.router.stall()
                if not outs and not any(self.queues.values()):
                    if self._done():
                        return self.transcript
                    raise Deadlock("no messages in flight and the session is not finished")
                for dst, frame in outs:
                    self._push(SERVER, dst, frame)
                continue
            src, dst = self.rng.choice(links)
            frame = self.queues[(src, dst)].popleft()
            self.transcript.add(src, dst, frame)
            if dst == SERVER:
                for d, f in self.router.ingest(frame, src):
                    self._push(SERVER, d, f)
            else:
                client = self.clients[dst]
                for env in client.receive(Envelope.from_bytes(frame)):
                    self._push(dst, SERVER, env.to_bytes())
        raise TransportError("step limit exceeded")


# TCP: one connection per client, u64 length-prefixed frames.


def send_frame(sock: socket.socket, frame: bytes) -> None:
    if len(frame) > MAX_FRAME:
        raise FrameTooLarge("frame exceeds the 64 MiB cap")
    sock.sendall(_FRAME_PREFIX.pack(len(frame)) + frame)


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


def recv_frame(sock: socket.socket) -> bytes | None:
    """Next frame, or ``None`` on a clean close between frames."""
    head = _recv_exact(sock, _FRAME_PREFIX.size)
    if head is None:
        return None
    (length,) = _FRAME_PREFIX.unpack(head)
    if length > MAX_FRAME:
        raise FrameTooLarge(f"incoming frame of {length} bytes exceeds the cap")
    body = _recv_exact(sock, length)
    if body is None:
        raise TransportError("connection closed mid-frame")
    return body


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {addr!r}")
    return host, int(port)


class TcpServer:
    """Accepts n client connections and runs the routing core on one thread."""

    def __init__(self, router: Router, n: int, host: str = "127.0.0.1", port: int = 0, timeout: float = 30.0):
        self.router = router
        self.n = n
        self.timeout = timeout
        self.transcript = Transcript()
        self.sock = socket.create_server((host, port))
        self.address = self.sock.getsockname()[:2]
        self._inbox: queue.Queue = queue.Queue()
        self._conns: dict[int, socket.socket] = {}
        self._closed: set[int] = set()
        self._held: dict[int, list[bytes]] = {}  # frames for clients not yet connected

    def _reader(self, conn: socket.socket) -> None:
        sender = None
        try:
            first = recv_frame(conn)
            if first is None:
                conn.close()
                return
            claimed = Envelope.from_bytes(first).sender
            if not 1 <= claimed <= self.n or claimed in self._conns:
                conn.close()
                return
            sender = claimed
            self._inbox.put(("hello", sender, conn, first))
            while True:
                frame = recv_frame(conn)
                if frame is None:
                    break
                self._inbox.put(("frame", sender, None, frame))
        except (OSError, TransportError, EnvelopeError) as exc:
            log.info("connection error: %s", exc)
        if sender is not None:
            self._inbox.put(("closed", sender, None, None))

    def _acceptor(self) -> None:
        # Runs until serve() closes the listening socket; readers drop strays.
        self.sock.settimeout(0.5)
        while True:
            try:
                conn, _ = self.sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.settimeout(None)
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(target=self._reader, args=(conn,), daemon=True).start()

    def _send(self, outs) -> None:
        for dst, frame in outs:
            if dst in self._closed:
                continue
            conn = self._conns.get(dst)
            if conn is None:
                self._held.setdefault(dst, []).append(frame)
                continue
            self.transcript.add(SERVER, dst, frame)
            try:
                send_frame(conn, frame)
            except OSError:
                self._closed.add(dst)

    def serve(self) -> Transcript:
        threading.Thread(target=self._acceptor, daemon=True).start()
        self._send(self.router.start())
        server = self.router.server
        try:
            while not (server.finished and all(i in self._closed for i in self._conns)):
                try:
                    kind, sender, conn, frame = self._inbox.get(timeout=self.timeout)
                except queue.Empty:
                    if server.finished:
                        break
                    self._send(self.router.stall())
                    continue
                if kind == "hello":
                    self._conns[sender] = conn
                    self._send([(sender, f) for f in self._held.pop(sender, [])])
                if kind in ("hello", "frame"):
                    self.transcript.add(sender, SERVER, frame)
                    self._send(self.router.ingest(frame, sender))
                else:
                    self._closed.add(sender)
                    if not server.finished:
                        self._send(self.router.lost(sender))
        finally:
            for conn in self._conns.values():
                try:
                    conn.close()
                except OSError:
                    pass
            self.sock.close()
        return self.transcript


def connect(addr: tuple[str, int], timeout: float = 60.0, retry_for: float = 0.0) -> socket.socket:
    """Connect, retrying refused attempts for up to ``retry_for`` seconds."""
    deadline = time.monotonic() + retry_for
    while True:
        try:
            return socket.create_connection(addr, timeout=timeout)
        except ConnectionRefusedError:
            if time.monotonic() >= deadline:
                raise
            time.sleep(0.05)


def run_tcp_client(party, addr: tuple[str, int], timeout: float = 60.0, retry_for: float = 0.0) -> None:
    with connect(addr, timeout, retry_for) as sock:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        for env in party.start():
            send_frame(sock, env.to_bytes())
        while not party.finished:
            frame = recv_frame(sock)
            if frame is None:
                raise TransportError("server closed the connection")
            for env in party.receive(Envelope.from_bytes(frame)):
                send_frame(sock, env.to_bytes())
