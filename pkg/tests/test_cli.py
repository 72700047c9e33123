import json
import math

import numpy as np
import pytest

from rmqenc import container
from rmqenc.cli import main
from rmqenc.tree_model import random_permutation, write_array

A5 = [3, 1, 4, 2, 5]


@pytest.fixture
def a5(tmp_path):
    p = tmp_path / "a5.txt"
    write_array(p, A5)
    return p


def run(capsys, *argv):
    code = main([str(x) for x in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_encode_prints_report_and_loads_back(a5, tmp_path, capsys):
    out_path = tmp_path / "a5.rmqe"
    code, out, _ = run(capsys, "encode", a5, "-o", out_path)
    assert code == 0
    assert "n=5" in out and "bits_per_n=" in out
    enc, meta = container.load(out_path)
    assert meta["n"] == 5 and enc.query(1, 5) == 2


def test_encode_is_deterministic(a5, tmp_path, capsys):
    p1, p2 = tmp_path / "x.rmqe", tmp_path / "y.rmqe"
    for p in (p1, p2):
        assert run(capsys, "encode", a5, "--mode", "rt2q", "--seed", "3", "-o", p)[0] == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_query_range(a5, tmp_path, capsys):
    rmq_path, t2_path = tmp_path / "r.rmqe", tmp_path / "t.rmqe"
    run(capsys, "encode", a5, "-o", rmq_path)
    run(capsys, "encode", a5, "--mode", "rt2q", "-o", t2_path)
    assert run(capsys, "query", rmq_path, "--range", 1, 5)[1] == "2\n"
    assert run(capsys, "query", t2_path, "--range", 1, 2)[1] == "2 1\n"
    code, _, err = run(capsys, "query", t2_path, "--range", 3, 3)
    assert code == 2 and "invalid" in err


def test_query_batch_preserves_order(tmp_path, capsys):
    a = random_permutation(2000, seed=1)
    arr = tmp_path / "a.txt"
    write_array(arr, a.values)
    enc_path = tmp_path / "a.rmqe"
    run(capsys, "encode", arr, "--entropy", "-o", enc_path)
    rng = np.random.default_rng(2)
    pairs = np.sort(rng.integers(1, 2001, size=(100000, 2)), axis=1)
    batch = tmp_path / "q.txt"
    batch.write_text("".join(f"{i} {j}\n" for i, j in pairs.tolist()))
    code, out, _ = run(capsys, "query", enc_path, "--batch", batch)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 100000
    vals = a.values
    for (i, j), got in list(zip(pairs.tolist(), lines))[::97]:
        assert int(got) == int(np.argmin(vals[i - 1:j])) + i


def test_query_batch_malformed_line(a5, tmp_path, capsys):
    enc_path = tmp_path / "a.rmqe"
    run(capsys, "encode", a5, "-o", enc_path)
    batch = tmp_path / "q.txt"
    batch.write_text("1 2\n3\n")
    code, _, err = run(capsys, "query", enc_path, "--batch", batch)
    assert code == 2 and ":2:" in err


@pytest.mark.parametrize("mode", ["rmq", "rt2q"])
def test_verify_exhaustive_n256(tmp_path, capsys, mode):
    arr = tmp_path / "a.txt"
    write_array(arr, random_permutation(256, seed=8).values)
    code, out, _ = run(capsys, "verify", arr, "--mode", mode, "--exhaustive")
    assert code == 0
    expected = 256 * 257 // 2 if mode == "rmq" else 256 * 255 // 2
    assert out.strip().startswith(f"PASS: {expected} checks")


def test_verify_sampled_with_container(tmp_path, capsys):
    arr = tmp_path / "a.txt"
    write_array(arr, random_permutation(500, seed=2).values)
    enc_path = tmp_path / "a.rmqe"
    run(capsys, "encode", arr, "--mode", "rt2q", "-o", enc_path)
    code, out, _ = run(capsys, "verify", arr, "--container", enc_path, "--samples", 3000,
                       "--seed", 4)
    assert code == 0 and "PASS: 3000 checks" in out


def test_verify_detects_corrupted_container(tmp_path, capsys):
    a = random_permutation(200, seed=6)
    arr = tmp_path / "a.txt"
    write_array(arr, a.values)
    enc_path = tmp_path / "a.rmqe"
    run(capsys, "encode", arr, "-o", enc_path)
    enc, _ = container.load(enc_path)
    # flip one child bit of the first micro-tree fingerprint
    enc.tree.payload[0] ^= 1
    (tmp_path / "bad.rmqe").write_bytes(container.dumps(enc))
    code, out, _ = run(capsys, "verify", arr, "--container", tmp_path / "bad.rmqe",
                       "--exhaustive")
    assert code == 1
    assert out.startswith("FAIL: rmq (") and "expected" in out


def test_error_exit_codes(tmp_path, capsys):
    dup = tmp_path / "dup.txt"
    dup.write_text("1\n1\n")
    assert run(capsys, "encode", dup)[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nseven\n")
    assert run(capsys, "encode", bad)[0] == 2
    assert run(capsys, "encode", tmp_path / "missing.txt")[0] == 3
    junk = tmp_path / "junk.rmqe"
    junk.write_bytes(b"not a container")
    assert run(capsys, "query", junk, "--range", 1, 1)[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["encode"])
    assert exc.value.code == 2


def test_experiment_census(capsys):
    code, out, _ = run(capsys, "experiment", "census", "--n", 5, "--family", "rmq", "--json")
    assert code == 0
    assert json.loads(out)["extra"]["classes"] == 42


def test_experiment_ultra_entropy(capsys):
    code, out, _ = run(capsys, "experiment", "ultra-entropy", "--n", 1000, "--trials", 100,
                       "--seed", 1, "--json")
    rep = json.loads(out)
    assert code == 0 and rep["trials"] == 100
    assert abs(rep["mean"] - 1.9919) <= 0.002


def test_experiment_text_output(capsys):
    code, out, _ = run(capsys, "experiment", "avgcase", "--n", 10000, "--trials", 3)
    assert code == 0
    assert "left_child_frequency" in out
    mean_line = [x for x in out.splitlines() if x.startswith("mean")][0]
    assert len(mean_line.split()[1].split(".")[1]) == 6


def test_lowerbound_rows(capsys):
    code, out, _ = run(capsys, "lowerbound", "--level", 1)
    assert code == 0 and "0.207107" in out and "2.271" in out
    code, out, _ = run(capsys, "lowerbound", "--level", 3)
    row = out.splitlines()[1].split()
    assert code == 0 and row[:4] == ["3", "676", "31", "8"]
    r, bound = float(row[4]), float(row[5])
    assert abs(r - 0.179836) <= 1e-5
    assert abs(bound - math.log2(1 / r)) <= 1e-5
    code, out, _ = run(capsys, "lowerbound", "--level", 2, "--brute-check")
    assert code == 0 and "DP = brute force: OK" in out
    code, out, _ = run(capsys, "lowerbound", "--level", "1-2", "--json")
    assert [r["level"] for r in json.loads(out)] == [1, 2]


def test_lowerbound_gate(capsys):
    code, out, _ = run(capsys, "lowerbound", "--level", 6)
    assert code == 2 and "MiB" in out
