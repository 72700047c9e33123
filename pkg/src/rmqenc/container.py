"""On-disk container for encodings.

Layout (all integers little-endian):

    magic "RMQE" | u32 version | u32 section count
    section table: count x (4-byte tag, u64 offset, u64 length)
    section bodies

Sections: META (sorted-key JSON), STRE (succinct tree), and RMQ1 or RT2Q.
Unknown tags are skipped with a warning.
"""

import json
import os
import struct
import warnings

from .errors import FormatError
from .rmq import RmqEncoding
from .rt2q import Rt2qEncoding
from .succinct_tree import SuccinctTree, TableMemo

MAGIC = b"RMQE"
VERSION = 1
_HEAD = "<4sII"
_ENTRY = "<4sQQ"


def _meta(enc, seed) -> dict:
    tree = enc.tree
    alpha = None
    if tree.alpha is not None:
        alpha = [f"{x.numerator}/{x.denominator}" for x in tree.alpha.as_tuple()]
    return {
        "n": enc.n,
        "mode": "rt2q" if isinstance(enc, Rt2qEncoding) else "rmq",
        "entropy": tree.mode == "entropy",
        "alpha": alpha,
        "seed": seed,
    }


def dumps(enc, seed=None, extra_sections=()) -> bytes:
    meta = _meta(enc, seed)
    tag = b"RT2Q" if meta["mode"] == "rt2q" else b"RMQ1"
    sections = [(b"META", json.dumps(meta, sort_keys=True).encode("utf-8")),
                (b"STRE", enc.tree.to_bytes()),
                (tag, enc.section_bytes())]
    sections.extend(extra_sections)
    head = struct.calcsize(_HEAD) + len(sections) * struct.calcsize(_ENTRY)
    table, bodies, pos = [], [], head
    for t, body in sections:
        table.append(struct.pack(_ENTRY, t, pos, len(body)))
        bodies.append(body)
        pos += len(body)
    return struct.pack(_HEAD, MAGIC, VERSION, len(sections)) + b"".join(table) + b"".join(bodies)


def loads(buf: bytes, memo: TableMemo = None):
    """Returns (encoding, meta dict)."""
    hs = struct.calcsize(_HEAD)
    if len(buf) < hs:
        raise FormatError("container too short")
    magic, version, count = struct.unpack_from(_HEAD, buf, 0)
    if magic != MAGIC:
        raise FormatError("bad magic; not an encoding container")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    es = struct.calcsize(_ENTRY)
    if len(buf) < hs + count * es:
        raise FormatError("truncated section table")
    found = {}
    for k in range(count):
        tag, off, length = struct.unpack_from(_ENTRY, buf, hs + k * es)
        if off + length > len(buf):
            raise FormatError(f"section {tag!r} runs past the end of the file")
        if tag not in (b"META", b"STRE", b"RMQ1", b"RT2Q"):
            warnings.warn(f"skipping unknown section {tag!r}")
            continue
        found[tag] = bytes(buf[off:off + length])
    for need in (b"META", b"STRE"):
        if need not in found:
            raise FormatError(f"missing {need.decode()} section")
    try:
        meta = json.loads(found[b"META"].decode("utf-8"))
    except ValueError as exc:
        raise FormatError(f"unreadable META section: {exc}") from None
    tree, _ = SuccinctTree.from_bytes(found[b"STRE"], 0, memo=memo)
    if tree.n != meta.get("n"):
        raise FormatError("META length does not match the tree section")
    if meta.get("mode") == "rt2q":
        if b"RT2Q" not in found:
            raise FormatError("missing RT2Q section")
        enc = Rt2qEncoding.from_sections(tree, found[b"RT2Q"])
    else:
        if b"RMQ1" not in found:
            raise FormatError("missing RMQ1 section")
        enc = RmqEncoding.from_sections(tree, found[b"RMQ1"])
    return enc, meta


def save(path, enc, seed=None) -> int:
    data = dumps(enc, seed)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return len(data)


def load(path, memo: TableMemo = None):
    with open(path, "rb") as fh:
        return loads(fh.read(), memo)
