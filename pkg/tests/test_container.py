import json
import struct

import pytest

from rmqenc import container, rmq, rt2q
from rmqenc.errors import FormatError
from rmqenc.succinct_tree import AlphaParams
from rmqenc.tree_model import random_permutation


def encodings():
    a = random_permutation(300, seed=4)
    return a, [rmq.encode(a), rmq.encode(a, mode="entropy"), rt2q.encode(a)]


def test_round_trip_answers_and_bytes():
    a, encs = encodings()
    for enc in encs:
        blob = container.dumps(enc, seed=17)
        back, meta = container.loads(blob)
        assert meta["n"] == 300 and meta["seed"] == 17
        lo = 1 if meta["mode"] == "rmq" else 2
        for i in range(1, 301, 7):
            for j in range(i + lo - 1, 301, 5):
                assert back.query(i, j) == enc.query(i, j)
        assert container.dumps(back, seed=17) == blob


def test_metadata_holds_rationals():
    a, encs = encodings()
    meta = container.loads(container.dumps(encs[1]))[1]
    assert meta["mode"] == "rmq" and meta["entropy"] is True
    assert meta["alpha"] == ["1/3", "1/6", "1/6", "1/3"]
    assert AlphaParams.parse(",".join(meta["alpha"])) == AlphaParams.default()
    assert container.loads(container.dumps(encs[0]))[1]["alpha"] is None


def test_rebuild_is_byte_identical():
    a = random_permutation(2000, seed=3)
    assert container.dumps(rt2q.encode(a), 5) == container.dumps(rt2q.encode(a), 5)
    assert container.dumps(rmq.encode(a), 5) == container.dumps(rmq.encode(a), 5)


def test_unknown_section_is_skipped_with_warning():
    a, encs = encodings()
    blob = container.dumps(encs[0], extra_sections=[(b"XTRA", b"hello")])
    with pytest.warns(UserWarning, match="XTRA"):
        back, _ = container.loads(blob)
    assert back.query(1, 300) == encs[0].query(1, 300)


def test_little_endian_header():
    a, encs = encodings()
    blob = container.dumps(encs[0])
    magic, version, count = struct.unpack_from("<4sII", blob, 0)
    assert magic == b"RMQE" and version == 1 and count == 3
    tag, off, length = struct.unpack_from("<4sQQ", blob, 12)
    assert tag == b"META"
    assert json.loads(blob[off:off + length])["n"] == 300


def test_malformed_containers():
    with pytest.raises(FormatError):
        container.loads(b"RMQ")
    with pytest.raises(FormatError):
        container.loads(b"XXXX" + bytes(8))
    a, encs = encodings()
    blob = container.dumps(encs[0])
    with pytest.raises(FormatError):
        container.loads(blob[:40])


def test_save_and_load_files(tmp_path):
    a, encs = encodings()
    p = tmp_path / "e.rmqe"
    size = container.save(p, encs[2], seed=1)
    assert p.stat().st_size == size
    back, meta = container.load(p)
    assert meta["mode"] == "rt2q"
    assert back.query(5, 200) == encs[2].query(5, 200)
