"""Explicit pointer-based binary trees used as build input and as oracle.

Nodes are identified by their 1-based inorder number, so for a Cartesian
tree node k corresponds to A[k].  Child and parent arrays use 0 for "none".
depth(root) is 0.
"""

import os
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DuplicateValueError, FormatError, RangeError

ARRAY_MAGIC = b"ARRI"


class ArrayInput:
    """A validated array A[1..n] of pairwise distinct integers.

    With ``break_ties=True`` repeated values are replaced by their stable
    rank, so an earlier position counts as smaller.  That leaves the
    distinct-values model, but keeps every oracle total on real data.
    """

    __slots__ = ("values", "ties_broken")

    def __init__(self, values, break_ties: bool = False):
        arr = np.asarray(values)
        if arr.ndim != 1:
            raise ValueError("array input must be one-dimensional")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("array values must be integers")
        arr = arr.astype(np.int64, copy=True)
        self.ties_broken = False
        if arr.size and np.unique(arr).size != arr.size:
            if not break_ties:
                raise DuplicateValueError("array contains duplicate values")
            order = np.argsort(arr, kind="stable")
            ranks = np.empty_like(arr)
            ranks[order] = np.arange(1, arr.size + 1)
            arr = ranks
            self.ties_broken = True
        self.values = arr

    @classmethod
    def coerce(cls, a, break_ties: bool = False) -> "ArrayInput":
        return a if isinstance(a, ArrayInput) else cls(a, break_ties=break_ties)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def at(self, i: int) -> int:
        """Value at 1-based position i."""
        return int(self.values[i - 1])

    def tolist(self):
        return self.values.tolist()

    def __repr__(self):
        return f"ArrayInput(n={self.n})"


class BinaryTreeModel:
    """Binary tree with inorder-numbered nodes 1..m."""

    def __init__(self, left, right, root: int):
        self.left = list(left)
        self.right = list(right)
        self.m = len(self.left) - 1
        self.root = root
        parent = [0] * (self.m + 1)
        for v in range(1, self.m + 1):
            if self.left[v]:
                parent[self.left[v]] = v
            if self.right[v]:
                parent[self.right[v]] = v
        self.parent = parent

    @classmethod
    def from_links(cls, left: dict, right: dict, root) -> "BinaryTreeModel":
        """Build from arbitrary labels; nodes are renumbered in inorder."""
        order = []
        stack = []
        v = root
        while stack or v is not None:
            while v is not None:
                stack.append(v)
                v = left.get(v)
            v = stack.pop()
            order.append(v)
            v = right.get(v)
        num = {x: k + 1 for k, x in enumerate(order)}
        m = len(order)
        L = [0] * (m + 1)
        R = [0] * (m + 1)
        for x, k in num.items():
            if left.get(x) is not None:
                L[k] = num[left[x]]
            if right.get(x) is not None:
                R[k] = num[right[x]]
        return cls(L, R, num[root] if m else 0)

    # -- derived arrays (plain traversals) -----------------------------------

    @cached_property
    def preorder(self):
        out = []
        if not self.m:
            return out
        left, right = self.left, self.right
        stack = [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            if right[v]:
                stack.append(right[v])
            if left[v]:
                stack.append(left[v])
        return out

    @cached_property
    def pre_rank(self):
        rank = [0] * (self.m + 1)
        for k, v in enumerate(self.preorder, 1):
            rank[v] = k
        return rank

    @cached_property
    def size(self):
        size = [1] * (self.m + 1)
        size[0] = 0
        parent = self.parent
        for v in reversed(self.preorder):
            p = parent[v]
            if p:
                size[p] += size[v]
        return size

    @cached_property
    def _depths(self):
        depth = [0] * (self.m + 1)
        ld = [0] * (self.m + 1)
        rd = [0] * (self.m + 1)
        left, right = self.left, self.right
        for v in self.preorder:
            c = left[v]
            if c:
                depth[c] = depth[v] + 1
                ld[c] = ld[v] + 1
                rd[c] = rd[v]
            c = right[v]
            if c:
                depth[c] = depth[v] + 1
                ld[c] = ld[v]
                rd[c] = rd[v] + 1
        return depth, ld, rd

    @property
    def depth(self):
        return self._depths[0]

    @property
    def ldepth(self):
        return self._depths[1]

    @property
    def rdepth(self):
        return self._depths[2]

    @cached_property
    def is_leaf(self):
        left, right = self.left, self.right
        return [False] + [not left[v] and not right[v] for v in range(1, self.m + 1)]

    @cached_property
    def leaf_count(self) -> int:
        return sum(self.is_leaf)

    def node_type(self, v: int) -> int:
        """2*[has left] + [has right]."""
        return (2 if self.left[v] else 0) + (1 if self.right[v] else 0)

    def validate(self):
        """Raise AssertionError if the tree violates its invariants."""
        m = self.m
        if m == 0:
            return
        roots = [v for v in range(1, m + 1) if self.parent[v] == 0]
        assert roots == [self.root], "exactly one root expected"
        for v in range(1, m + 1):
            for c in (self.left[v], self.right[v]):
                if c:
                    assert self.parent[c] == v
        assert sorted(self.preorder) == list(range(1, m + 1))
        # inorder numbering: left subtree ids < v < right subtree ids
        for v in range(1, m + 1):
            lsz = self.size[self.left[v]]
            assert self.left[v] == 0 or self.left[v] < v
            if self.left[v]:
                assert v - lsz >= 1
            if self.right[v]:
                assert self.right[v] > v
        assert self.inorder_sequence() == list(range(1, m + 1))

    def inorder_sequence(self):
        out = []
        stack = []
        v = self.root
        left, right = self.left, self.right
        while stack or v:
            while v:
                stack.append(v)
                v = left[v]
            v = stack.pop()
            out.append(v)
            v = right[v]
        return out

    def shape_key(self):
        """Hashable description of the topology."""
        return (self.root, tuple(self.left[1:]), tuple(self.right[1:]))

    def __repr__(self):
        return f"BinaryTreeModel(m={self.m}, root={self.root})"


# -- construction -------------------------------------------------------------

def build_cartesian(a, break_ties: bool = False) -> BinaryTreeModel:
    """Min-rooted Cartesian tree by the usual stack construction."""
    a = ArrayInput.coerce(a, break_ties=break_ties)
    vals = a.values.tolist()
    n = len(vals)
    left = [0] * (n + 1)
    right = [0] * (n + 1)
    stack = []
    for k in range(1, n + 1):
        x = vals[k - 1]
        last = 0
        while stack and vals[stack[-1] - 1] > x:
            last = stack.pop()
        if last:
            left[k] = last
        if stack:
            right[stack[-1]] = k
        stack.append(k)
    return BinaryTreeModel(left, right, stack[0] if stack else 0)


def left_path(n: int) -> BinaryTreeModel:
    return build_cartesian(list(range(n, 0, -1)))


def right_path(n: int) -> BinaryTreeModel:
    return build_cartesian(list(range(1, n + 1)))


def complete_tree(n: int) -> BinaryTreeModel:
    """Heap-shaped complete tree with n nodes (perfect when n = 2^k - 1)."""
    left = {i: 2 * i for i in range(1, n + 1) if 2 * i <= n}
    right = {i: 2 * i + 1 for i in range(1, n + 1) if 2 * i + 1 <= n}
    return BinaryTreeModel.from_links(left, right, 1)


def organ_pipe(n: int):
    """1, 3, 5, ... rising then ..., 6, 4, 2 falling."""
    return list(range(1, n + 1, 2)) + list(range(n - n % 2, 0, -2))


def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """PCG64 generator; distinct streams are independent SeedSequence children."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def random_permutation(n: int, seed=0, stream: int = 0) -> ArrayInput:
    """Uniform permutation of 1..n (numpy's Fisher-Yates shuffle on PCG64)."""
    if n < 1:
        raise RangeError("n must be at least 1")
    perm = make_rng(seed, stream).permutation(n) + 1
    return ArrayInput(perm)


def random_tree(n: int, seed=0, stream: int = 0) -> BinaryTreeModel:
    return build_cartesian(random_permutation(n, seed, stream))


# -- naive query oracles --------------------------------------------------------

def naive_rmq(a, i: int, j: int) -> int:
    a = ArrayInput.coerce(a)
    if not 1 <= i <= j <= a.n:
        raise RangeError(f"range ({i},{j}) invalid for n={a.n}")
    vals = a.values
    best = i
    for k in range(i + 1, j + 1):
        if vals[k - 1] < vals[best - 1]:
            best = k
    return best


def naive_rt2q(a, i: int, j: int):
    a = ArrayInput.coerce(a)
    if not 1 <= i < j <= a.n:
        raise RangeError(f"range ({i},{j}) invalid for n={a.n}")
    vals = a.values
    first = naive_rmq(a, i, j)
    second = 0
    for k in range(i, j + 1):
        if k != first and (second == 0 or vals[k - 1] < vals[second - 1]):
            second = k
    return first, second


class NaiveTreeOps:
    """Linear-walk implementations of the succinct tree operations.

    These only follow parent/child pointers; nothing is precomputed apart
    from the preorder listing.
    """

    def __init__(self, t: BinaryTreeModel):
        self.t = t

    def _check(self, v):
        if not isinstance(v, (int, np.integer)) or not 1 <= v <= self.t.m:
            raise RangeError(f"unknown node id {v!r}")

    def parent(self, v):
        self._check(v)
        return self.t.parent[v] or None

    def left_child(self, v):
        self._check(v)
        return self.t.left[v] or None

    def right_child(self, v):
        self._check(v)
        return self.t.right[v] or None

    def is_leaf(self, v):
        self._check(v)
        return not self.t.left[v] and not self.t.right[v]

    def _path_to_root(self, v):
        path = []
        while v:
            path.append(v)
            v = self.t.parent[v]
        return path

    def depth(self, v):
        self._check(v)
        return len(self._path_to_root(v)) - 1

    def ldepth(self, v):
        self._check(v)
        t = self.t
        c = 0
        while t.parent[v]:
            if t.left[t.parent[v]] == v:
                c += 1
            v = t.parent[v]
        return c

    def rdepth(self, v):
        self._check(v)
        return self.depth(v) - self.ldepth(v)

    def lca(self, u, v):
        self._check(u)
        self._check(v)
        seen = set(self._path_to_root(u))
        while v not in seen:
            v = self.t.parent[v]
        return v

    def subtree_size(self, v):
        self._check(v)
        t = self.t
        count = 0
        stack = [v]
        while stack:
            x = stack.pop()
            count += 1
            if t.left[x]:
                stack.append(t.left[x])
            if t.right[x]:
                stack.append(t.right[x])
        return count

    def preorder_rank(self, v):
        self._check(v)
        return self.t.preorder.index(v) + 1

    def preorder_select(self, k):
        if not 1 <= k <= self.t.m:
            raise RangeError(f"preorder rank {k} out of range")
        return self.t.preorder[k - 1]

    def inorder_rank(self, v):
        self._check(v)
        return v

    def inorder_select(self, k):
        if not 1 <= k <= self.t.m:
            raise RangeError(f"inorder rank {k} out of range")
        return k

    def leaf_rank(self, v):
        """Leaves with preorder rank <= that of v."""
        self._check(v)
        count = 0
        for x in self.t.preorder:
            if not self.t.left[x] and not self.t.right[x]:
                count += 1
            if x == v:
                return count
        raise AssertionError("node missing from preorder")

    OPS = ("parent", "left_child", "right_child", "is_leaf", "depth", "ldepth",
           "rdepth", "lca", "subtree_size", "preorder_rank", "preorder_select",
           "inorder_rank", "inorder_select", "leaf_rank")


def naive_tree_ops(t: BinaryTreeModel, query: str, *args):
    """Dispatch a single oracle query by name, e.g. ("lca", 3, 5)."""
    if query not in NaiveTreeOps.OPS:
        raise ValueError(f"unknown query {query!r}")
    return getattr(NaiveTreeOps(t), query)(*args)


# -- spines -----------------------------------------------------------------------

@dataclass
class SpineProfile:
    """Per-node spine quantities, indexed by inorder number (slot 0 unused)."""

    l: list
    r: list
    L: list
    R: list
    m: list
    ldepth: list
    rdepth: list
    leftleaves: list
    L_root: int = 0
    R_root: int = 0


def spine_profile(t: BinaryTreeModel) -> SpineProfile:
    n = t.m
    left, right = t.left, t.right
    L = [0] * (n + 1)
    R = [0] * (n + 1)
    for v in reversed(t.preorder):
        L[v] = 1 + L[left[v]]
        R[v] = 1 + R[right[v]]
    l = [0] * (n + 1)
    r = [0] * (n + 1)
    mm = [0] * (n + 1)
    for v in range(1, n + 1):
        l[v] = R[left[v]]
        r[v] = L[right[v]]
        mm[v] = max(l[v] + r[v] - 1, 0)
    leftleaves = [0] * (n + 1)
    run = 0
    for v in range(1, n + 1):
        leftleaves[v] = run
        if not left[v] and not right[v]:
            run += 1
    return SpineProfile(l, r, L, R, mm, list(t.ldepth), list(t.rdepth), leftleaves,
                        L[t.root] if n else 0, R[t.root] if n else 0)


def spine_nodes(t: BinaryTreeModel, v: int, side: str):
    """Nodes of lspine/rspine/lispine/rispine of v, top to bottom."""
    if side == "lspine":
        start, step = v, t.left
    elif side == "rspine":
        start, step = v, t.right
    elif side == "lispine":
        start, step = t.left[v], t.right
    elif side == "rispine":
        start, step = t.right[v], t.left
    else:
        raise ValueError(side)
    out = []
    x = start
    while x:
        out.append(x)
        x = step[x]
    return out


# -- array files -------------------------------------------------------------------

def read_array(path) -> list:
    """Read newline-separated decimal text or the binary ARRI format."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == ARRAY_MAGIC:
        if len(data) < 12:
            raise FormatError("truncated ARRI header")
        (n,) = struct.unpack_from("<Q", data, 4)
        if len(data) != 12 + 8 * n:
            raise FormatError(f"ARRI length mismatch: header says {n} values")
        return np.frombuffer(data, dtype="<i8", count=n, offset=12).tolist()
    out = []
    for lineno, line in enumerate(data.decode("ascii", errors="strict").splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        try:
            out.append(int(s))
        except ValueError:
            raise FormatError(f"line {lineno}: not a decimal integer: {s!r}") from None
    return out


def write_array(path, values, binary: bool = False):
    vals = np.asarray(values, dtype=np.int64)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        if binary:
            fh.write(ARRAY_MAGIC + struct.pack("<Q", vals.size))
            fh.write(vals.astype("<i8").tobytes())
        else:
            fh.write("".join(f"{v}\n" for v in vals.tolist()).encode("ascii"))
    os.replace(tmp, path)
