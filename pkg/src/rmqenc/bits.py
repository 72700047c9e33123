"""Rank/select bitvectors.

Positions are 1-based and rank is a prefix count: ``rank(bit, i)`` counts
occurrences of ``bit`` among positions 1..i.  ``select(bit, k)`` returns the
position of the k-th occurrence, or None.

Three layouts are provided:

* BitVector: plain payload of m bits plus a superblock/block rank
  directory and sampled select hints.
* SparseBitVector with ``encoding="rrr"``: fixed 15-bit blocks stored as a
  (class, offset) pair; the offsets form the payload.
* SparseBitVector with ``encoding="ef"``: Elias-Fano position coding, the
  better choice when ones are rare.
"""

import math
import struct
from functools import lru_cache

import numpy as np

from .errors import FormatError, RangeError

SUPER_BITS = 2048
BLOCK_BITS = 256
SAMPLE_RATE = 512
_BLOCKS_PER_SUPER = SUPER_BITS // BLOCK_BITS
_WORDS_PER_BLOCK = BLOCK_BITS // 64
_MASK64 = (1 << 64) - 1


def as_bit_array(bits) -> np.ndarray:
    """Coerce a '0'/'1' string, an iterable of 0/1 or an array to uint8."""
    if isinstance(bits, np.ndarray):
        arr = bits.astype(np.uint8, copy=False).ravel()
    elif isinstance(bits, (str, bytes)):
        raw = bits.encode() if isinstance(bits, str) else bits
        arr = np.frombuffer(raw, dtype=np.uint8) - ord("0")
    else:
        arr = np.fromiter((1 if b else 0 for b in bits), dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return arr


def lg_binomial(m: int, n: int) -> int:
    """ceil(lg C(m, n)) computed exactly with big integers."""
    c = math.comb(m, n)
    return (c - 1).bit_length() if c > 1 else 0


def _words_from_bits(arr: np.ndarray) -> np.ndarray:
    m = int(arr.size)
    nwords = m // 64 + 1  # always one spare word so rank(m) never overruns
    padded = np.zeros(nwords * 64, dtype=np.uint8)
    padded[:m] = arr
    return np.packbits(padded, bitorder="little").view("<u8").astype(np.uint64)


def _bits_from_words(words: np.ndarray, m: int) -> np.ndarray:
    raw = words.astype("<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:m]


class _RankSelect:
    """Shared public surface; subclasses supply rank1/select1/select0."""

    _m = 0
    _ones = 0

    def __len__(self):
        return self._m

    @property
    def ones(self) -> int:
        return self._ones

    @property
    def zeros(self) -> int:
        return self._m - self._ones

    def _check_prefix(self, i):
        if i < 0 or i > self._m:
            raise RangeError(f"prefix length {i} outside 0..{self._m}")

    def rank0(self, i: int) -> int:
        return i - self.rank1(i)

    def rank(self, bit: int, i: int) -> int:
        return self.rank1(i) if bit else self.rank0(i)

    def select(self, bit: int, k: int):
        return self.select1(k) if bit else self.select0(k)

    def access(self, i: int) -> int:
        """Bit at 1-based position i."""
        if i < 1 or i > self._m:
            raise RangeError(f"position {i} outside 1..{self._m}")
        return self.rank1(i) - self.rank1(i - 1)

    def __getitem__(self, i):
        return self.access(i)

    def to_string(self) -> str:
        return "".join(str(b) for b in self.to_array().tolist())

    def size_report(self) -> dict:
        raise NotImplementedError

    def total_bits(self) -> int:
        rep = self.size_report()
        return rep["payload_bits"] + rep["directory_bits"]


class BitVector(_RankSelect):
    """Plain bitvector with m payload bits and a two-level rank directory.

    Directory: one 64-bit absolute count per 2048-bit superblock, one
    11-bit relative count per 256-bit block, and the positions of every
    512th one and every 512th zero as select hints.  At m >= 2^16 this
    stays near 11% of the payload.
    """

    __slots__ = ("_m", "_ones", "_words", "_super", "_block", "_s1", "_s0")

    def __init__(self, bits=()):
        arr = as_bit_array(bits)
        self._build(_words_from_bits(arr), int(arr.size), arr)

    @classmethod
    def from_words(cls, words, m: int) -> "BitVector":
        obj = cls.__new__(cls)
        words = np.asarray(words, dtype=np.uint64)
        need = m // 64 + 1
        if words.size < need:
            words = np.concatenate([words, np.zeros(need - words.size, dtype=np.uint64)])
        words = words[:need].copy()
        if m % 64:
            words[m // 64] &= np.uint64((1 << (m % 64)) - 1)
        words[m // 64 + 1:] = 0
        if m % 64 == 0:
            words[m // 64] = 0
        obj._build(words, m, _bits_from_words(words, m))
        return obj

    def _build(self, words, m, arr):
        self._m = m
        nblocks = m // BLOCK_BITS + 1
        nwords = nblocks * _WORDS_PER_BLOCK
        if words.size < nwords:
            words = np.concatenate([words, np.zeros(nwords - words.size, dtype=np.uint64)])
        pc = np.bitwise_count(words[:nwords]).astype(np.int64)
        per_block = pc.reshape(nblocks, _WORDS_PER_BLOCK).sum(axis=1)
        before = np.zeros(nblocks + 1, dtype=np.int64)
        np.cumsum(per_block, out=before[1:])
        nsuper = m // SUPER_BITS + 1
        sup = before[0:nsuper * _BLOCKS_PER_SUPER:_BLOCKS_PER_SUPER][:nsuper]
        rel = before[:nblocks] - np.repeat(sup, _BLOCKS_PER_SUPER)[:nblocks]
        self._words = words.tolist()
        self._super = sup.tolist()
        self._block = rel.tolist()
        ones_pos = np.flatnonzero(arr)
        zero_pos = np.flatnonzero(arr == 0)
        self._ones = int(ones_pos.size)
        self._s1 = ones_pos[::SAMPLE_RATE].tolist()
        self._s0 = zero_pos[::SAMPLE_RATE].tolist()

    def rank1(self, i: int) -> int:
        if i < 0 or i > self._m:
            raise RangeError(f"prefix length {i} outside 0..{self._m}")
        words = self._words
        b = i >> 8
        r = self._super[i >> 11] + self._block[b]
        w = i >> 6
        for k in range(b << 2, w):
            r += words[k].bit_count()
        if i & 63:
            r += (words[w] & ((1 << (i & 63)) - 1)).bit_count()
        return r

    def select1(self, k: int):
        if k < 1 or k > self._ones:
            return None
        sup = self._super
        si = (k - 1) // SAMPLE_RATE
        lo = self._s1[si] >> 11
        hi = (self._s1[si + 1] >> 11) if si + 1 < len(self._s1) else len(sup) - 1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if sup[mid] < k:
                lo = mid
            else:
                hi = mid - 1
        r = k - sup[lo]
        block = self._block
        b = lo * _BLOCKS_PER_SUPER
        bend = min(b + _BLOCKS_PER_SUPER, len(block))
        while b + 1 < bend and block[b + 1] < r:
            b += 1
        r -= block[b]
        words = self._words
        w = b * _WORDS_PER_BLOCK
        while True:
            c = words[w].bit_count()
            if c >= r:
                break
            r -= c
            w += 1
        x = words[w]
        for _ in range(r - 1):
            x &= x - 1
        return w * 64 + (x & -x).bit_length()

    def select0(self, k: int):
        if k < 1 or k > self._m - self._ones:
            return None
        sup = self._super
        si = (k - 1) // SAMPLE_RATE
        lo = self._s0[si] >> 11
        hi = (self._s0[si + 1] >> 11) if si + 1 < len(self._s0) else len(sup) - 1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if mid * SUPER_BITS - sup[mid] < k:
                lo = mid
            else:
                hi = mid - 1
        r = k - (lo * SUPER_BITS - sup[lo])
        block = self._block
        base = lo * _BLOCKS_PER_SUPER
        b = base
        bend = min(b + _BLOCKS_PER_SUPER, len(block))
        while b + 1 < bend and (b + 1 - base) * BLOCK_BITS - block[b + 1] < r:
            b += 1
        r -= (b - base) * BLOCK_BITS - block[b]
        words = self._words
        w = b * _WORDS_PER_BLOCK
        while True:
            c = 64 - words[w].bit_count()
            if c >= r:
                break
            r -= c
            w += 1
        x = ~words[w] & _MASK64
        for _ in range(r - 1):
            x &= x - 1
        return w * 64 + (x & -x).bit_length()

    def access(self, i: int) -> int:
        if i < 1 or i > self._m:
            raise RangeError(f"position {i} outside 1..{self._m}")
        i -= 1
        return (self._words[i >> 6] >> (i & 63)) & 1

    def to_array(self) -> np.ndarray:
        return _bits_from_words(np.array(self._words, dtype=np.uint64), self._m)

    def size_report(self) -> dict:
        sample_w = max((self._m + 1).bit_length(), 1)
        directory = (len(self._super) * 64 + len(self._block) * 11
                     + (len(self._s1) + len(self._s0)) * sample_w)
        return {"payload_bits": self._m, "directory_bits": directory}

    def to_bytes(self) -> bytes:
        nw = (self._m + 63) // 64
        words = np.array(self._words[:nw], dtype="<u8")
        return struct.pack("<QQ", self._m, self._ones) + words.tobytes()

    @classmethod
    def from_bytes(cls, buf, offset: int = 0):
        """Returns (BitVector, new offset)."""
        if len(buf) < offset + 16:
            raise FormatError("truncated bitvector header")
        m, ones = struct.unpack_from("<QQ", buf, offset)
        offset += 16
        nw = (m + 63) // 64
        if len(buf) < offset + 8 * nw:
            raise FormatError("truncated bitvector payload")
        words = np.frombuffer(bytes(buf[offset:offset + 8 * nw]), dtype="<u8").astype(np.uint64)
        bv = cls.from_words(words, m)
        if bv.ones != ones:
            raise FormatError("bitvector ones count does not match payload")
        return bv, offset + 8 * nw

    def __eq__(self, other):
        return isinstance(other, BitVector) and self._m == other._m and self._words == other._words

    def __hash__(self):
        return hash((self._m, tuple(self._words)))

    def __repr__(self):
        return f"BitVector(m={self._m}, ones={self._ones})"


# ---------------------------------------------------------------------------
# compressed variants

_RRR_B = 15
_RRR_SUPER = 32  # blocks per superblock


@lru_cache(maxsize=1)
def _rrr_tables():
    patterns = [[] for _ in range(_RRR_B + 1)]
    for x in range(1 << _RRR_B):
        patterns[x.bit_count()].append(x)
    index = {}
    for c, lst in enumerate(patterns):
        for j, x in enumerate(lst):
            index[x] = j
    widths = [max((len(lst) - 1).bit_length(), 0) for lst in patterns]
    return patterns, index, widths


class _RRR:
    def __init__(self, arr: np.ndarray):
        patterns, index, widths = _rrr_tables()
        m = int(arr.size)
        nb = (m + _RRR_B - 1) // _RRR_B
        padded = np.zeros(nb * _RRR_B, dtype=np.int64)
        padded[:m] = arr
        vals = (padded.reshape(nb, _RRR_B) << np.arange(_RRR_B)).sum(axis=1).tolist() if nb else []
        classes = [v.bit_count() for v in vals]
        self.offsets = [index[v] for v in vals]
        self.classes = classes
        self.m = m
        self.nb = nb
        before = np.zeros(nb + 1, dtype=np.int64)
        if nb:
            np.cumsum(classes, out=before[1:])
        nsuper = (nb >> 5) + 2
        self.srank = [int(before[min(s * _RRR_SUPER, nb)]) for s in range(nsuper)]
        self.ones = sum(classes)
        self.payload = sum(widths[c] for c in classes)
        self._patterns = patterns

    def _pattern(self, b):
        return self._patterns[self.classes[b]][self.offsets[b]]

    def rank1(self, i):
        blk = i // _RRR_B
        s = blk >> 5
        r = self.srank[s]
        cls = self.classes
        for b in range(s << 5, blk):
            r += cls[b]
        rem = i - blk * _RRR_B
        if rem:
            r += (self._pattern(blk) & ((1 << rem) - 1)).bit_count()
        return r

    def _locate(self, b, r, invert):
        x = self._pattern(b)
        if invert:
            x = ~x & ((1 << _RRR_B) - 1)
        for _ in range(r - 1):
            x &= x - 1
        return b * _RRR_B + (x & -x).bit_length()

    def select1(self, k):
        sr = self.srank
        lo, hi = 0, len(sr) - 1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if sr[mid] < k:
                lo = mid
            else:
                hi = mid - 1
        r = k - sr[lo]
        b = lo << 5
        cls = self.classes
        while cls[b] < r:
            r -= cls[b]
            b += 1
        return self._locate(b, r, False)

    def select0(self, k):
        sr = self.srank
        span = _RRR_SUPER * _RRR_B
        lo, hi = 0, len(sr) - 1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if mid * span - sr[mid] < k:
                lo = mid
            else:
                hi = mid - 1
        r = k - (lo * span - sr[lo])
        b = lo << 5
        cls = self.classes
        while _RRR_B - cls[b] < r:
            r -= _RRR_B - cls[b]
            b += 1
        return self._locate(b, r, True)

    def to_array(self):
        vals = np.array([self._pattern(b) for b in range(self.nb)], dtype=np.int64)
        bits = ((vals[:, None] >> np.arange(_RRR_B)) & 1).astype(np.uint8)
        return bits.ravel()[: self.m]

    def directory_bits(self):
        w = max((self.m + 1).bit_length(), 1)
        pw = max((self.payload + 1).bit_length(), 1)
        return 4 * self.nb + len(self.srank) * (w + pw)


class _EliasFano:
    def __init__(self, arr: np.ndarray):
        m = int(arr.size)
        pos = np.flatnonzero(arr).astype(np.int64)
        n = int(pos.size)
        self.m = m
        self.ones = n
        low = (m // n).bit_length() - 1 if n else 0
        self.low = low
        mask = (1 << low) - 1
        self.lows = (pos & mask).tolist()
        highs = pos >> low
        hbits = np.zeros(n + (m >> low) + 1, dtype=np.uint8)
        hbits[highs + np.arange(n)] = 1
        self.high = BitVector(hbits)
        self.payload = n * low + len(self.high)

    def rank1(self, i):
        if i >= self.m:
            return self.ones
        hi = i >> self.low
        lowi = i & ((1 << self.low) - 1)
        if hi:
            z = self.high.select0(hi)
            j = z - hi
        else:
            j = 0
        hb = self.high
        lows = self.lows
        n = self.ones
        # ones in H directly after the hi-th zero share the high part hi
        while j < n and hb.access(j + hi + 1) == 1 and lows[j] < lowi:
            j += 1
        return j

    def select1(self, k):
        p = self.high.select1(k)
        high = p - k  # zeros before the k-th one
        return ((high << self.low) | self.lows[k - 1]) + 1

    def select0(self, k):
        lo, hi = k, self.m
        while lo < hi:
            mid = (lo + hi) >> 1
            if mid - self.rank1(mid) >= k:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def to_array(self):
        out = np.zeros(self.m, dtype=np.uint8)
        if self.ones:
            hb = self.high.to_array()
            ones_at = np.flatnonzero(hb)
            highs = ones_at - np.arange(self.ones)
            out[(highs << self.low) | np.array(self.lows, dtype=np.int64)] = 1
        return out

    def directory_bits(self):
        return self.high.size_report()["directory_bits"]


class SparseBitVector(_RankSelect):
    """Compressed bitvector with the same query semantics as BitVector.

    ``encoding`` is "rrr", "ef" or "auto" (smaller total of the two).
    For "rrr" the payload obeys payload <= ceil(lg C(m,n)) + #blocks,
    and the 4-bit class of each block is charged to the directory.
    """

    __slots__ = ("_m", "_ones", "_impl", "_kind")

    def __init__(self, bits=(), encoding: str = "auto"):
        arr = as_bit_array(bits)
        self._m = int(arr.size)
        if encoding == "auto":
            a = _RRR(arr)
            b = _EliasFano(arr)
            ta = a.payload + a.directory_bits()
            tb = b.payload + b.directory_bits()
            self._impl, self._kind = (a, "rrr") if ta <= tb else (b, "ef")
        elif encoding == "rrr":
            self._impl, self._kind = _RRR(arr), "rrr"
        elif encoding == "ef":
            self._impl, self._kind = _EliasFano(arr), "ef"
        else:
            raise ValueError(f"unknown encoding {encoding!r}")
        self._ones = self._impl.ones

    @property
    def encoding(self) -> str:
        return self._kind

    def rank1(self, i: int) -> int:
        if i < 0 or i > self._m:
            raise RangeError(f"prefix length {i} outside 0..{self._m}")
        if i == 0:
            return 0
        return self._impl.rank1(i)

    def select1(self, k: int):
        if k < 1 or k > self._ones:
            return None
        return self._impl.select1(k)

    def select0(self, k: int):
        if k < 1 or k > self._m - self._ones:
            return None
        return self._impl.select0(k)

    def to_array(self) -> np.ndarray:
        return self._impl.to_array()

    def size_report(self) -> dict:
        return {
            "payload_bits": self._impl.payload,
            "directory_bits": self._impl.directory_bits(),
            "lg_binomial": lg_binomial(self._m, self._ones),
            "encoding": self._kind,
        }

    def to_bytes(self) -> bytes:
        # stored in plain form; the compressed layout is rebuilt on load
        plain = BitVector(self.to_array())
        kind = {"rrr": 0, "ef": 1}[self._kind]
        return struct.pack("<B", kind) + plain.to_bytes()

    @classmethod
    def from_bytes(cls, buf, offset: int = 0):
        if len(buf) < offset + 1:
            raise FormatError("truncated sparse bitvector")
        (kind,) = struct.unpack_from("<B", buf, offset)
        if kind > 1:
            raise FormatError(f"unknown sparse encoding {kind}")
        plain, offset = BitVector.from_bytes(buf, offset + 1)
        return cls(plain.to_array(), encoding=("rrr", "ef")[kind]), offset

    def __repr__(self):
        return f"SparseBitVector(m={self._m}, ones={self._ones}, encoding={self._kind!r})"
