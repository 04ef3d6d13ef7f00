import json
from fractions import Fraction
import subprocess
import sys

import pytest

from weakbw.cli import EXIT_INPUT, EXIT_MISMATCH, EXIT_OK, EXIT_UNKNOWN, main
from weakbw.families import FAMILY_TEXT
from weakbw.io import DumpError, SCHEMAS, read_records, validate


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, [json.loads(ln) for ln in out.splitlines() if ln.strip()]


@pytest.fixture
def parity_file(tmp_path):
    p = tmp_path / "parity.txt"
    p.write_text(FAMILY_TEXT["parity"])
    return p


def test_roundtrip_parity(parity_file, capsys):
    code, recs = run(["roundtrip", "--predicate", str(parity_file), "--nmax", "16"], capsys)
    assert code == EXIT_OK
    rows = [r for r in recs if r["type"] == "roundtrip"]
    assert len(rows) == 16 and all(r["match"] for r in rows)
    assert recs[-1] == {"type": "status", "status": "ok"}
    for r in recs:
        validate(r)


def test_roundtrip_always_gives_zeros(capsys):
    code, recs = run(["roundtrip", "--family", "always", "--nmax", "8"], capsys)
    assert code == EXIT_OK
    assert [r["g"] for r in recs if r["type"] == "roundtrip"] == [0] * 8


def test_roundtrip_staged_unknown(parity_file, capsys):
    code, recs = run(["roundtrip", "--predicate", str(parity_file), "--oracle", "staged", "--horizon", "1"], capsys)
    assert code == EXIT_UNKNOWN != EXIT_MISMATCH
    assert recs[-1]["status"] == "unknown"


def test_roundtrip_reports_mismatch(tmp_path, capsys):
    # annotations lie: they claim A(n) for every n, the matrix says odd n fail
    p = tmp_path / "liar.txt"
    p.write_text("(2 * y -. n) + (n -. 2 * y)\nbound: n\nfailure: (none, 0)*\ntruth: (1)*\n")
    code, recs = run(["roundtrip", "--predicate", str(p), "--nmax", "4"], capsys)
    assert code == EXIT_MISMATCH
    assert recs[-1]["status"] == "mismatch" and "n=1" in recs[-1]["message"]


def test_encode_cluster_extract_verify(tmp_path, capsys):
    dump, point = tmp_path / "seq.jsonl", tmp_path / "pt.jsonl"
    assert main(["encode", "--family", "threshold", "--imax", "8", "--precision", "20", "-o", str(dump)]) == EXIT_OK
    recs = read_records(dump)
    assert recs[0]["type"] == "header" and len(recs) == 10
    assert main(["cluster", "--input", str(dump), "--precision", "16", "-o", str(point)]) == EXIT_OK
    kinds = [r["type"] for r in read_records(point)]
    assert kinds == ["point", "trace"]
    code, out = run(["extract", "--point", str(point), "--nmax", "8"], capsys)
    assert code == EXIT_OK and [r["g"] for r in out] == [0, 0, 0, 0, 0, 1, 1, 1]
    code, out = run(["verify", "--input", str(dump), "--point", str(point), "--k", "8", "--horizon", "1000"], capsys)
    assert code == EXIT_OK and out[0]["ok"] is True
    # asking for more than the stored precision is an input error
    assert main(["extract", "--point", str(point), "--nmax", "16"]) == EXIT_INPUT


def test_tail_dump_roundtrip(tmp_path, capsys):
    dump = tmp_path / "tail.jsonl"
    lines = [
        {"type": "header", "imax": 1, "precision": 1, "predicate": None, "tail": {"start": 0, "period": 2}, "bound": "1"},
        {"type": "point", "i": 0, "k": 1, "coords": ["1/2"], "normBound": "1"},
        {"type": "point", "i": 1, "k": 1, "coords": ["0", "3/6"], "normBound": "1"},
    ]
    dump.write_text("".join(json.dumps(r) + "\n" for r in lines))
    code, out = run(["cluster", "--input", str(dump), "--precision", "10"], capsys)
    assert code == EXIT_OK
    from weakbw.exact import FinVec

    v = FinVec.from_json(out[0]["coords"])
    assert any((v - FinVec(t)).norm_sq() <= Fraction(1, 4 ** 10) for t in (["1/2"], ["0", "1/2"]))


def test_reduce_cli(capsys):
    code, recs = run(["reduce", "--chain", "fwd-chain", "--instance", "family:square", "--precision", "8"], capsys)
    assert code == EXIT_OK and recs[0]["valid"] is True
    code, recs = run(["reduce", "--chain", "rev-chain", "--instance", "random:3", "--seed", "4", "--precision", "8"], capsys)
    assert code == EXIT_OK and sum(r["type"] == "reduce" for r in recs) == 3


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("x + \n")
    assert main(["roundtrip", "--predicate", str(bad)]) == EXIT_INPUT
    assert main(["roundtrip", "--predicate", str(tmp_path / "missing.txt")]) == EXIT_INPUT
    assert main(["roundtrip"]) == EXIT_INPUT
    assert main(["roundtrip", "--family", "always", "--precision", "0"]) == EXIT_INPUT
    junk = tmp_path / "junk.jsonl"
    junk.write_text('{"type": "point", "k": 1}\n')
    assert main(["cluster", "--input", str(junk)]) == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_schema_rejects_malformed_records():
    with pytest.raises(DumpError):
        validate({"type": "point", "k": 1, "coords": ["1/0"], "normBound": "1"})
    with pytest.raises(DumpError):
        validate({"type": "nope"})
    assert set(SCHEMAS) >= {"header", "point", "trace", "roundtrip", "reduce", "status"}


def test_determinism_byte_identical(tmp_path):
    outs = []
    for t in range(2):
        d, p = tmp_path / f"d{t}.jsonl", tmp_path / f"p{t}.jsonl"
        main(["encode", "--family", "parity", "--imax", "6", "--precision", "12", "-o", str(d)])
        main(["cluster", "--input", str(d), "--precision", "10", "-o", str(p)])
        outs.append((d.read_bytes(), p.read_bytes()))
    assert outs[0] == outs[1]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "weakbw", "roundtrip", "--family", "square", "--nmax", "4"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.count('"match":true') == 4
