import random

import cbor2
import pytest

from skre.core import PlainInput, ProtocolConfig, kre_oracle
from skre.metrics import build_metrics, holds_plaintext_input, star_violations
from skre.net.envelope import PROTOCOL_IDS, Envelope
from skre.proto import PROTOCOLS, build_parties, run_protocol

ALL = sorted(PROTOCOLS)
ROUNDS = {"ygc": 4, "ahe-lin": 4, "ahe-dgk": 4, "she": 2}


def oracle(values, k, mu=8, live=None):
    live = range(1, len(values) + 1) if live is None else live
    return kre_oracle([PlainInput(values[i - 1], i, mu) for i in live], k, len(values))


@pytest.mark.parametrize("protocol", ALL)
@pytest.mark.parametrize("values,k,t", [([9, 2, 7, 4, 11], 3, 2), ([5, 5, 1], 2, 1), ([0, 255], 2, 2), ([3, 3, 3, 3], 1, 4)])
def test_outputs_match_oracle(protocol, values, k, t):
    cfg = ProtocolConfig(len(values), k, t, 8, seed=11)
    res = run_protocol(protocol, cfg, values)
    assert res.aborted is None
    assert set(res.outputs.values()) == {oracle(values, k)}
    assert res.rounds == ROUNDS[protocol]
    assert build_metrics(res)["counts_match"]
    assert not star_violations(res.transcript)
    assert not holds_plaintext_input(res.server)


@pytest.mark.parametrize("protocol", ALL)
def test_transcripts_are_reproducible(protocol):
    cfg = ProtocolConfig(4, 2, 2, 6, seed=5)
    a = run_protocol(protocol, cfg, [1, 40, 22, 9])
    b = run_protocol(protocol, cfg, [1, 40, 22, 9])
    assert a.transcript.digest() == b.transcript.digest()
    c = run_protocol(protocol, ProtocolConfig(4, 2, 2, 6, seed=6), [1, 40, 22, 9])
    assert c.transcript.digest() != a.transcript.digest()


@pytest.mark.parametrize("protocol", ALL)
def test_tcp_equals_loopback(protocol):
    cfg = ProtocolConfig(3, 2, 2, 8, seed=8)
    a = run_protocol(protocol, cfg, [17, 4, 200])
    b = run_protocol(protocol, cfg, [17, 4, 200], transport="tcp")
    assert b.outputs == a.outputs and not b.client_errors
    assert b.transcript.digest() == a.transcript.digest()


@pytest.mark.parametrize("protocol", ["ahe-lin", "ahe-dgk"])
@pytest.mark.parametrize("transport", ["loopback", "tcp"])
def test_threshold_protocols_survive_an_early_crash(protocol, transport):
    values = [9, 2, 7, 4, 11]
    cfg = ProtocolConfig(5, 2, 2, 8, seed=3)
    res = run_protocol(protocol, cfg, values, transport=transport, crash={3}, timeout=1.0)
    assert res.aborted is None
    want = oracle(values, 2, live=[1, 2, 4, 5])
    assert {i: v for i, v in res.outputs.items() if i != 3} == {i: want for i in (1, 2, 4, 5)}
    assert res.server.live == [1, 2, 4, 5]


@pytest.mark.parametrize("protocol", ["ygc", "she"])
def test_other_protocols_abort_on_crash(protocol):
    res = run_protocol(protocol, ProtocolConfig(4, 2, 2, 8, seed=3), [1, 2, 3, 4], crash={2})
    assert res.aborted and all(v is None for v in res.outputs.values())


def test_crash_below_threshold_aborts():
    res = run_protocol("ahe-dgk", ProtocolConfig(3, 1, 3, 8, seed=1), [1, 2, 3], crash={1})
    assert "threshold" in res.aborted


def test_crash_leaving_too_few_for_k_aborts():
    res = run_protocol("ahe-lin", ProtocolConfig(3, 3, 2, 8, seed=1), [1, 2, 3], crash={2})
    assert "k=3" in res.aborted


def _server(protocol="ahe-dgk", n=3):
    cfg = ProtocolConfig(n, 1, 2, 8, seed=2)
    _, setup, server, clients, _ = build_parties(protocol, cfg, [1] * n)
    return server, clients


def test_duplicate_registration_is_refused_without_abort():
    server, clients = _server()
    reg = clients[1].start()[0]
    assert server.receive(reg) == []
    (reply,) = server.receive(reg)
    assert reply.receiver == 1 and cbor2.loads(reply.payload)["type"] == "error"
    assert server.aborted is None


def test_malformed_payload_aborts_session():
    server, clients = _server()
    bad = Envelope(PROTOCOL_IDS["ahe-dgk"], server.session, 1, 1, 0, b"\xff\xff")
    outs = server.receive(bad)
    assert server.aborted and len(outs) == 3
    assert all(cbor2.loads(o.payload)["type"] == "abort" for o in outs)


def test_out_of_phase_message_aborts():
    server, clients = _server()
    rogue = clients[1].env(0, 3, {"type": "m", "cts": {}})
    server.receive(rogue)
    assert "phase" in server.aborted


def test_client_aborts_on_server_abort():
    server, clients = _server()
    for e in server.abort("test"):
        clients[e.receiver].receive(e)
    assert all(c.aborted and c.finished for c in clients.values())


def test_random_instances_small():
    rng = random.Random(99)
    for protocol in ALL:
        for _ in range(3):
            n = rng.randint(2, 5)
            k = rng.randint(1, n)
            t = rng.choice([1, 2, n]) if n >= 2 else 1
            values = [rng.randrange(16) for _ in range(n)]
            res = run_protocol(protocol, ProtocolConfig(n, k, min(t, n), 4, seed=rng.getrandbits(32)), values)
            assert set(res.outputs.values()) == {oracle(values, k, mu=4)}
