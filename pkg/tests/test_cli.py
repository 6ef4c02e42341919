import csv
import io
import json
import socket
import threading
from contextlib import redirect_stdout

import pytest

from skre import cli
from skre.metrics import comparable


def run(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(list(argv))
    return code, buf.getvalue()


def test_simulate_median(tmp_path):
    out = tmp_path / "m.json"
    code, text = run("simulate", "--protocol", "ahe-dgk", "--n", "5", "--k", "3", "--t", "2",
                     "--inputs", "9,2,7,4,11", "--check", "--metrics-out", str(out))
    assert code == 0 and text.strip() == "7"
    m = json.loads(out.read_text())
    assert m["schema"] == "skre-metrics/1" and m["rounds"] == 4 and m["counts_match"]


def test_inputs_from_file(tmp_path):
    f = tmp_path / "in.txt"
    f.write_text("9 2\n7 4 11\n")
    assert run("simulate", "--protocol", "ygc", "--n", "5", "--inputs", str(f), "--check")[1].strip() == "7"


def test_check_flags_injected_fault():
    code, _ = run("simulate", "--n", "3", "--inputs", "1,2,3", "--check", "--inject-fault")
    assert code == cli.EXIT_MISMATCH


def test_config_errors():
    assert run("simulate", "--n", "3", "--k", "4")[0] == cli.EXIT_CONFIG
    assert run("simulate", "--n", "3", "--inputs", "1,2")[0] == cli.EXIT_CONFIG
    assert run("simulate", "--n", "3", "--mu", "4", "--inputs", "1,2,99")[0] == cli.EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        run("simulate", "--protocol", "nope", "--n", "3")
    assert exc.value.code == 2


def test_abort_exit_code():
    assert run("simulate", "--protocol", "ygc", "--n", "3", "--crash", "2")[0] == cli.EXIT_ABORT


def test_same_seed_same_metrics(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        run("simulate", "--protocol", "she", "--n", "4", "--seed", "3", "--metrics-out", str(p))
    a, b = (json.loads(p.read_text()) for p in paths)
    assert comparable(a) == comparable(b)


def test_keygen():
    code, text = run("keygen", "--protocol", "ahe-lin", "--n", "4", "--t", "3")
    rec = json.loads(text)
    assert code == 0 and rec["threshold_shares"] == 4 and len(rec["common_pk"]) == 66


def test_bench_csv():
    code, text = run("bench", "--protocol", "ahe-lin", "--n", "2-3", "--mu", "4")
    lines = text.strip().splitlines()
    assert code == 0 and lines[0] == cli.BENCH_HEADER
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["n"]) for r in rows] == [2, 3]
    assert all(r["counts_match"] == "1" for r in rows)
    assert int(rows[1]["s_bits"]) > int(rows[0]["s_bits"])


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_server_and_clients_over_tcp(capsys):
    addr = f"127.0.0.1:{_free_port()}"
    common = ["--protocol", "ahe-dgk", "--n", "3", "--seed", "4", "--addr", addr, "--timeout", "10"]
    codes = {}

    def role(name, argv):
        codes[name] = cli.main(argv)

    threads = [threading.Thread(target=role, args=("server", ["server", *common]))]
    for i, v in enumerate([30, 10, 20], start=1):
        argv = ["client", *common, "--index", str(i), "--value", str(v)]
        threads.append(threading.Thread(target=role, args=(i, argv)))
    for th in threads:
        th.start()
    for th in threads:
        th.join(30)
    assert codes == {"server": 0, 1: 0, 2: 0, 3: 0}
    assert capsys.readouterr().out.split() == ["20", "20", "20"]


def test_wrong_port_is_a_connection_error():
    code, _ = run("client", "--n", "3", "--index", "1", "--value", "1", "--wait", "0", "--addr", f"127.0.0.1:{_free_port()}")
    assert code == cli.EXIT_CONFIG
