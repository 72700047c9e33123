"""Fixed-width integer packing used by the serializers."""

import struct

import numpy as np

from .errors import FormatError


def width_for(max_value: int) -> int:
    """Bits needed to store integers in 0..max_value."""
    return max(int(max_value).bit_length(), 1) if max_value > 0 else 0


def pack_ints(values, signed: bool = False) -> bytes:
    """Pack a sequence of integers at the smallest common width.

    Layout: u64 count, u8 width, u8 signed flag, then the bit stream
    (LSB first) padded to a byte boundary.  Signed values are stored with
    a +1 bias, which only suits the small range -1..max used here.
    """
    arr = np.asarray(values, dtype=np.int64).ravel()
    if signed:
        if arr.size and arr.min() < -1:
            raise ValueError("signed packing supports values >= -1 only")
        arr = arr + 1
    elif arr.size and arr.min() < 0:
        raise ValueError("negative value in unsigned packing")
    count = int(arr.size)
    width = width_for(int(arr.max())) if count else 0
    head = struct.pack("<QBB", count, width, 1 if signed else 0)
    if count == 0 or width == 0:
        return head
    u = arr.astype(np.uint64)
    shifts = np.arange(width, dtype=np.uint64)
    parts = [head]
    step = 1 << 17  # multiple of 8 keeps chunk boundaries byte aligned
    for s in range(0, count, step):
        chunk = u[s:s + step]
        bits = ((chunk[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
        parts.append(np.packbits(bits.ravel(), bitorder="little").tobytes())
    return b"".join(parts)


def unpack_ints(buf, offset: int = 0):
    """Inverse of pack_ints.  Returns (list of ints, new offset)."""
    if len(buf) < offset + 10:
        raise FormatError("truncated integer block")
    count, width, signed = struct.unpack_from("<QBB", buf, offset)
    offset += 10
    if count == 0:
        return [], offset
    if width == 0:
        vals = np.zeros(count, dtype=np.int64)
    else:
        nbytes = (count * width + 7) // 8
        if len(buf) < offset + nbytes:
            raise FormatError("truncated integer block")
        raw = np.frombuffer(bytes(buf[offset:offset + nbytes]), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[: count * width]
        bits = bits.reshape(count, width)
        weights = np.uint64(1) << np.arange(width, dtype=np.uint64)
        vals = np.empty(count, dtype=np.int64)
        step = 1 << 17
        for s in range(0, count, step):
            chunk = bits[s:s + step].astype(np.uint64)
            vals[s:s + step] = (chunk * weights[None, :]).sum(axis=1, dtype=np.uint64)
        offset += nbytes
    if signed:
        vals = vals - 1
    return vals.tolist(), offset


def packed_bits(values) -> int:
    """Size in bits of the packed stream (header excluded)."""
    if len(values) == 0:
        return 0
    lo = min(values)
    hi = max(values)
    bias = 1 if lo < 0 else 0
    return len(values) * width_for(hi + bias)


def pack_blob(data: bytes) -> bytes:
    return struct.pack("<Q", len(data)) + data


def unpack_blob(buf, offset: int = 0):
    if len(buf) < offset + 8:
        raise FormatError("truncated blob")
    (length,) = struct.unpack_from("<Q", buf, offset)
    offset += 8
    if len(buf) < offset + length:
        raise FormatError("truncated blob")
    return bytes(buf[offset:offset + length]), offset + length
