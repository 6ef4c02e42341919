"""Command-line entry point: simulate, server, client, keygen, bench.

Exit codes: 0 success, 2 configuration error, 3 protocol abort,
4 result differs from the plaintext oracle under ``--check``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import random
import sys
from pathlib import Path

from . import __version__
from .core import ConfigError, PlainInput, ProtocolConfig, kre_oracle
from .group import get_group
from .metrics import COUNTED, build_metrics, expected_counts, measure
from .net.envelope import PROTOCOL_IDS, SERVER
from .net.session import setup_session
from .net.transport import Router, TcpServer, TransportError, parse_addr, run_tcp_client
from .proto import build_parties, effective_config, run_protocol
from .rng import make_rng

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_MISMATCH = 0, 2, 3, 4
DEFAULT_ADDR = "127.0.0.1:7600"
BENCH_HEADER = (
    "protocol,n,k,t,mu,time_s,c_bits,s_bits,client_objects,server_objects,"
    "expected_client_objects,expected_server_objects,counts_match"
)


def _config(args, n: int | None = None) -> ProtocolConfig:
    n = args.n if n is None else n
    k = args.k if args.k is not None else (n + 1) // 2
    t = args.t if args.t is not None else min(2, n)
    return effective_config(args.protocol, ProtocolConfig(n, k, t, args.mu, seed=args.seed))


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _inputs(args, cfg: ProtocolConfig) -> list[int]:
    if args.inputs is None:
        rng = random.Random(f"inputs:{cfg.seed}")
        return [rng.randrange(1 << cfg.mu) for _ in range(cfg.n)]
    src = args.inputs
    path = Path(src)
    values = _parse_ints(path.read_text() if path.is_file() else src)
    if len(values) != cfg.n:
        raise ConfigError(f"expected {cfg.n} inputs, got {len(values)}")
    for v in values:
        if not 0 <= v < 1 << cfg.mu:
            raise ConfigError(f"input {v} does not fit in mu={cfg.mu} bits")
    return values


def _oracle(values, cfg: ProtocolConfig, live=None) -> int:
    live = range(1, cfg.n + 1) if live is None else live
    return kre_oracle([PlainInput(values[i - 1], i, cfg.mu) for i in live], cfg.k, cfg.n)


def _write_metrics(path, metrics: dict) -> None:
    if path:
        Path(path).write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    values = _inputs(args, cfg)
    crash = set(args.crash or [])
    result = run_protocol(args.protocol, cfg, values, transport=args.transport, crash=crash)
    if args.inject_fault:
        first = min(i for i, v in result.outputs.items() if v is not None) if any(
            v is not None for v in result.outputs.values()
        ) else None
        if first is not None:
            result.outputs[first] ^= 1
    metrics = build_metrics(result)
    _write_metrics(args.metrics_out, metrics)
    if result.aborted:
        print(f"aborted: {result.aborted}", file=sys.stderr)
        return EXIT_ABORT
    outs = {v for v in result.outputs.values() if v is not None}
    print(" ".join(str(v) for v in sorted(outs)) if len(outs) != 1 else outs.pop())
    print(f"rounds={result.rounds} transcript={metrics['transcript_sha256']}", file=sys.stderr)
    if args.check:
        live = [i for i in range(1, cfg.n + 1) if i not in crash]
        want = _oracle(values, cfg, live)
        bad = {i: v for i, v in result.outputs.items() if i in live and v != want}
        if bad:
            print(f"check failed: oracle says {want}, clients {sorted(bad)} disagree", file=sys.stderr)
            return EXIT_MISMATCH
    return EXIT_OK


def cmd_server(args) -> int:
    cfg = _config(args)
    _, setup, server, _, _ = build_parties(args.protocol, cfg, [0] * cfg.n)
    host, port = parse_addr(args.addr)
    router = Router(server, cfg.n, PROTOCOL_IDS[args.protocol], setup.session_id)
    tcp = TcpServer(router, cfg.n, host, port, timeout=args.timeout)
    print(f"listening on {tcp.address[0]}:{tcp.address[1]}", file=sys.stderr, flush=True)
    transcript = tcp.serve()
    if args.metrics_out:
        traffic = measure(transcript, cfg.n)
        _write_metrics(args.metrics_out, {
            "protocol": args.protocol,
            "transcript_sha256": transcript.digest(),
            "server_bytes": traffic[SERVER].bytes_up,
            "aborted": server.aborted,
        })
    if server.aborted:
        print(f"aborted: {server.aborted}", file=sys.stderr)
        return EXIT_ABORT
    print("session complete", file=sys.stderr)
    return EXIT_OK


def cmd_client(args) -> int:
    cfg = _config(args)
    if args.index is None or args.value is None:
        raise ConfigError("client needs --index and --value")
    if not 1 <= args.index <= cfg.n:
        raise ConfigError(f"index {args.index} outside [1, {cfg.n}]")
    values = [0] * cfg.n
    values[args.index - 1] = args.value
    _, _, _, clients, _ = build_parties(args.protocol, cfg, values)
    party = clients[args.index]
    run_tcp_client(party, parse_addr(args.addr), timeout=args.timeout, retry_for=args.wait)
    if party.aborted:
        print(f"aborted: {party.aborted}", file=sys.stderr)
        return EXIT_ABORT
    print(party.result)
    return EXIT_OK


def cmd_keygen(args) -> int:
    """Run the test-mode dealer and print the public half of its output."""
    cfg = _config(args)
    group = get_group()
    setup = setup_session(args.protocol, cfg, group, make_rng(cfg.seed))
    record = {
        "protocol": args.protocol,
        "n": cfg.n,
        "t": cfg.t,
        "session_id": setup.session_id,
        "curve": group.name,
        **setup.installed(),
    }
    if setup.server.common_pk is not None:
        record["common_pk"] = setup.server.common_pk.to_bytes().hex()
    if setup.server.she_ctx is not None:
        record["she_fingerprint"] = setup.server.she_ctx.fingerprint
    text = json.dumps(record, indent=2, sort_keys=True)
    if args.metrics_out:
        Path(args.metrics_out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        lo, sep, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    return out


def bench_rows(protocol: str, ns, k, t, mu: int, seed: int | None):
    for n in ns:
        cfg = effective_config(
            protocol, ProtocolConfig(n, k if k is not None else (n + 1) // 2, t if t is not None else min(2, n), mu, seed=seed)
        )
        rng = random.Random(f"bench:{seed}:{n}")
        values = [rng.randrange(1 << mu) for _ in range(n)]
        result = run_protocol(protocol, cfg, values)
        metrics = build_metrics(result)
        parties = metrics["parties"]
        exp = expected_counts(protocol, cfg, getattr(result.server, "decryptors", ()))
        clients = [parties[str(i)] for i in range(1, n + 1)]
        yield {
            "protocol": protocol,
            "n": n,
            "k": cfg.k,
            "t": cfg.t,
            "mu": mu,
            "time_s": f"{result.wall_time:.4f}",
            "c_bits": 8 * max(c["bytes_up"] for c in clients),
            "s_bits": 8 * parties[str(SERVER)]["bytes_up"],
            "client_objects": sum(sum(c["sent"].values()) for c in clients),
            "server_objects": sum(parties[str(SERVER)]["sent"].values()),
            "expected_client_objects": sum(exp[i][key] for i in range(1, n + 1) for key in COUNTED),
            "expected_server_objects": sum(exp[SERVER][key] for key in COUNTED),
            "counts_match": int(metrics["counts_match"]),
        }


def cmd_bench(args) -> int:
    ns = _parse_range(args.n_range)
    for n in ns:
        ProtocolConfig(n, 1, 1, args.mu)  # validate early
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=BENCH_HEADER.split(","), lineterminator="\n")
        writer.writeheader()
        for row in bench_rows(args.protocol, ns, args.k, args.t, args.mu, args.seed):
            writer.writerow(row)
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _common(p: argparse.ArgumentParser, n_required: bool = True) -> None:
    p.add_argument("--protocol", choices=sorted(PROTOCOL_IDS), default="ahe-dgk")
    if n_required:
        p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, help="rank to select (default: median)")
    p.add_argument("--t", type=int, help="decryption threshold (default 2; she uses n)")
    p.add_argument("--mu", type=int, default=8, help="input bit length")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skre", description="Secure k-th ranked element on a star network")
    parser.add_argument("--version", action="version", version=f"skre {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    addr = os.environ.get("SKRE_ADDR", DEFAULT_ADDR)

    p = sub.add_parser("simulate", help="run every party in-process")
    _common(p)
    p.add_argument("--inputs", help="comma/space separated values, or a file holding them")
    p.add_argument("--transport", choices=("loopback", "tcp"), default="loopback")
    p.add_argument("--check", action="store_true", help="compare every output with the plaintext oracle")
    p.add_argument("--metrics-out", help="write the metrics JSON here")
    p.add_argument("--crash", type=int, action="append", help="client index that dies before uploading")
    p.add_argument("--inject-fault", action="store_true", help="corrupt one output (exercises --check)")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_ in (("server", cmd_server, "run the server over TCP"), ("client", cmd_client, "run one client over TCP")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--addr", default=addr, help="host:port (env SKRE_ADDR)")
        p.add_argument("--timeout", type=float, default=30.0)
        if name == "client":
            p.add_argument("--index", type=int)
            p.add_argument("--value", type=int)
            p.add_argument("--wait", type=float, default=5.0, help="seconds to keep retrying a refused connection")
        else:
            p.add_argument("--metrics-out")
        p.set_defaults(func=func)

    p = sub.add_parser("keygen", help="run the test-mode dealer and print public key material")
    _common(p)
    p.add_argument("--metrics-out", help="also write the record here")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("bench", help="CSV of time and traffic over a range of n")
    _common(p, n_required=False)
    p.add_argument("--n", dest="n_range", default="5,10,20", help="e.g. 5,10,20 or 2-8")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
