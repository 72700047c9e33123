"""Two-level decomposed binary tree with inorder rank/select and LCA.

The tree is cut into disjoint connected mini-trees of at most ``mini_cap``
nodes, and each mini-tree into micro-trees of at most ``micro_cap`` nodes.
Every component has at most one boundary node (a non-root node with a child
in another component) and that node has a single external child.  Only the
shape of each micro-tree is stored (a 2-bit-per-node fingerprint, or in
entropy mode an arithmetic code of its node types); everything else lives
in small per-micro and per-mini directories.

Node ids pack the global micro index with the preorder offset inside the
micro-tree: ``id = micro << 5 | offset``.

Coordinates used throughout:

* global preorder/inorder ranks are 1-based;
* mini-local preorder and inorder positions ("mlp", "mli") are 0-based
  ranks among the nodes of one mini-tree;
* micro-local offsets are 0-based preorder ranks inside the micro-tree.

Converting a local position to the enclosing level needs at most two
inserted subtrees: the external left subtree of the component root (which
follows the root in preorder) and the external subtree hanging below the
boundary node (the "hole").
"""

import math
import struct
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import arith
from ._packing import pack_blob, pack_ints, packed_bits, unpack_blob, unpack_ints
from .bits import BitVector, SparseBitVector
from .errors import DomainError, FormatError, RangeError
from .tree_model import BinaryTreeModel

OFFSET_BITS = 5
OFFSET_MASK = (1 << OFFSET_BITS) - 1
MAX_MICRO_CAP = 31

# node type code: 2 * [has left] + [has right]
T_LEAF, T_RIGHT, T_LEFT, T_BOTH = 0, 1, 2, 3


def pack_id(micro: int, offset: int) -> int:
    return (micro << OFFSET_BITS) | offset


# ---------------------------------------------------------------------------
# node-type probabilities


class AlphaParams:
    """Probabilities (a0, aL, aR, a2) of leaf / left-only / right-only / two-child nodes."""

    __slots__ = ("a0", "aL", "aR", "a2")

    def __init__(self, a0, aL, aR, a2):
        vals = [Fraction(x).limit_denominator(10**12) if isinstance(x, float) else Fraction(x)
                for x in (a0, aL, aR, a2)]
        for x in vals:
            if not 0 < x < 1:
                raise DomainError(f"probability {x} outside (0,1)")
        if sum(vals) != 1:
            raise DomainError(f"probabilities sum to {sum(vals)}, not 1")
        self.a0, self.aL, self.aR, self.a2 = vals

    @classmethod
    def default(cls) -> "AlphaParams":
        return cls(Fraction(1, 3), Fraction(1, 6), Fraction(1, 6), Fraction(1, 3))

    @classmethod
    def capped(cls, x) -> "AlphaParams":
        """a0 = a2 = clamp(x, 1/20, 9/20), aL = aR = (1 - 2 a0) / 2."""
        x = Fraction(x)
        a0 = min(max(x, Fraction(1, 20)), Fraction(9, 20))
        side = (1 - 2 * a0) / 2
        return cls(a0, side, side, a0)

    @classmethod
    def parse(cls, text: str) -> "AlphaParams":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise DomainError("expected four comma-separated probabilities")
        try:
            return cls(*(Fraction(p) for p in parts))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from None

    def by_type(self):
        """Probabilities indexed by node type code."""
        return (self.a0, self.aR, self.aL, self.a2)

    def as_tuple(self):
        return (self.a0, self.aL, self.aR, self.a2)

    @property
    def minimum(self) -> Fraction:
        return min(self.as_tuple())

    def measure(self, counts) -> float:
        """sum n_i lg(1/a_i) for counts indexed by type code."""
        return sum(c * math.log2(1 / float(p)) for c, p in zip(counts, self.by_type()) if c)

    def __eq__(self, other):
        return isinstance(other, AlphaParams) and self.as_tuple() == other.as_tuple()

    def __repr__(self):
        return "AlphaParams({})".format(", ".join(str(x) for x in self.as_tuple()))


def type_counts(t: BinaryTreeModel):
    """Counts of nodes by type code (leaf, right-only, left-only, both)."""
    counts = [0, 0, 0, 0]
    left, right = t.left, t.right
    for v in range(1, t.m + 1):
        counts[(2 if left[v] else 0) + (1 if right[v] else 0)] += 1
    return counts


def default_caps(n: int, alpha: Optional[AlphaParams] = None):
    """Practical capacities: mini = ceil(lg^2 n), micro = clamp(floor(lg n / 2), 4, 31)."""
    lg = math.log2(max(n, 2))
    mini = max(math.ceil(lg * lg), 2)
    micro = min(max(int(lg // 2), 4), MAX_MICRO_CAP)
    return mini, micro


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class Component:
    root: int
    nodes: list  # model node ids in preorder
    boundary: Optional[int] = None
    external: Optional[int] = None


@dataclass
class Decomposition:
    minis: list
    micros: list  # micros[m] lists the micro components of mini m
    mini_cap: int
    micro_cap: int
    mini_of: list = field(repr=False)
    micro_of: list = field(repr=False)  # global micro index per node
    offset: list = field(repr=False)  # preorder offset inside the micro

    @property
    def n_m(self) -> int:
        return len(self.minis)

    @property
    def micro_count(self) -> int:
        return sum(len(x) for x in self.micros)

    def check(self, t: BinaryTreeModel):
        """Assert every structural invariant; returns the component counts."""
        n = t.m
        seen = [0] * (n + 1)
        for level, comps, cap, owner in (
            ("mini", self.minis, self.mini_cap, self.mini_of),
            ("micro", [c for grp in self.micros for c in grp], self.micro_cap, self.micro_of),
        ):
            covered = 0
            for idx, comp in enumerate(comps):
                assert 1 <= len(comp.nodes) <= cap, f"{level} {idx} over capacity"
                members = set(comp.nodes)
                assert comp.root in members
                boundary = []
                for v in comp.nodes:
                    assert owner[v] == owner[comp.root]
                    if v != comp.root:
                        assert t.parent[v] in members, f"{level} {idx} not connected"
                    ext = [c for c in (t.left[v], t.right[v]) if c and c not in members]
                    if ext and v != comp.root:
                        boundary.append((v, ext))
                assert len(boundary) <= 1, f"{level} {idx} has {len(boundary)} boundary nodes"
                if boundary:
                    v, ext = boundary[0]
                    assert len(ext) == 1, f"{level} {idx} boundary has two external children"
                    assert comp.boundary == v and comp.external == ext[0]
                else:
                    assert comp.boundary is None
                covered += len(comp.nodes)
            assert covered == n, f"{level} components do not partition the nodes"
        for m, grp in enumerate(self.micros):
            for comp in grp:
                assert self.mini_of[comp.root] == m
                for v in comp.nodes:
                    seen[v] += 1
        assert all(seen[1:]), "micro-trees do not cover the tree"
        return self.n_m, self.micro_count


def _greedy_closed(t: BinaryTreeModel, cap: int, group=None):
    """Bottom-up greedy partition; returns a flag per node marking component roots.

    Each node keeps an open residual component (its size, how many boundary
    nodes it already contains, and how many external children the node
    itself has).  Open children are merged when capacity and the
    one-boundary rule allow it; otherwise they are closed.  With ``group``
    given, edges between different groups are treated as external.
    """
    n = t.m
    left, right, parent = t.left, t.right, t.parent
    res = [0] * (n + 1)
    cost = [0] * (n + 1)
    closed = bytearray(n + 1)
    for v in reversed(t.preorder):
        gv = group[v] if group is not None else 0
        opens = []
        e = 0
        for c in (left[v], right[v]):
            if not c:
                continue
            if (group is not None and group[c] != gv) or closed[c]:
                e += 1
            else:
                opens.append(c)
        p = parent[v]
        top = p == 0 or (group is not None and group[p] != gv)
        if not opens:
            choices = ((),)
        elif len(opens) == 1:
            choices = ((opens[0],), ())
        else:
            choices = ((opens[0], opens[1]), (opens[0],), (opens[1],), ())
        best = None
        for S in choices:
            size = 1
            b = 0
            for c in S:
                size += res[c]
                b += cost[c]
            if size > cap or b > 1:
                continue
            ee = e + len(opens) - len(S)
            merge = (not top) and size < cap and ee <= 1 and b + (1 if ee else 0) <= 1
            nclosed = len(opens) - len(S) + (0 if merge else 1)
            key = (nclosed, size if merge else -size)
            if best is None or key < best[0]:
                best = (key, S, size, b, ee, merge)
        _, S, size, b, ee, merge = best
        for c in opens:
            if c not in S:
                closed[c] = 1
        res[v] = size
        cost[v] = b + (1 if ee else 0)
        if not merge:
            closed[v] = 1
    return closed


def _components(t, closed, group=None):
    """Component id per node (its component root) from the closed flags."""
    comp = [0] * (t.m + 1)
    parent = t.parent
    for v in t.preorder:
        comp[v] = v if closed[v] else comp[parent[v]]
    return comp


def decompose(t: BinaryTreeModel, mini_cap: int, micro_cap: int) -> Decomposition:
    if mini_cap < 2 or micro_cap < 2:
        raise DomainError("capacities must be at least 2")
    if micro_cap > MAX_MICRO_CAP:
        raise DomainError(f"micro capacity is limited to {MAX_MICRO_CAP}")
    n = t.m
    if n == 0:
        raise DomainError("empty tree")
    pre = t.pre_rank
    order = t.preorder
    mini_root = _components(t, _greedy_closed(t, mini_cap))
    roots = sorted({mini_root[v] for v in order}, key=lambda r: pre[r])
    mini_index = {r: k for k, r in enumerate(roots)}
    mini_of = [0] * (n + 1)
    for v in order:
        mini_of[v] = mini_index[mini_root[v]]
    micro_root = _components(t, _greedy_closed(t, micro_cap, mini_of), mini_of)
    mroots = sorted({micro_root[v] for v in order}, key=lambda r: (mini_of[r], pre[r]))
    micro_index = {r: k for k, r in enumerate(mroots)}
    micro_of = [0] * (n + 1)
    offset = [0] * (n + 1)
    count = [0] * len(mroots)
    micro_nodes = [[] for _ in mroots]
    mini_nodes = [[] for _ in roots]
    for v in order:
        g = micro_index[micro_root[v]]
        micro_of[v] = g
        offset[v] = count[g]
        count[g] += 1
        micro_nodes[g].append(v)
        mini_nodes[mini_of[v]].append(v)

    def boundary_of(nodes, owner):
        root = nodes[0]
        for v in nodes[1:]:
            for c in (t.left[v], t.right[v]):
                if c and owner[c] != owner[v]:
                    return v, c
        return None, None

    minis = []
    for m, nodes in enumerate(mini_nodes):
        b, c = boundary_of(nodes, mini_of)
        minis.append(Component(nodes[0], nodes, b, c))
    micros = [[] for _ in roots]
    for g, nodes in enumerate(micro_nodes):
        b, c = boundary_of(nodes, micro_of)
        micros[mini_of[nodes[0]]].append(Component(nodes[0], nodes, b, c))
    return Decomposition(minis, micros, mini_cap, micro_cap, mini_of, micro_of, offset)


# ---------------------------------------------------------------------------
# micro-tree shapes


def fingerprint_of(nodes, offset, local_left, local_right) -> int:
    """Two bits per node in local preorder: bit 2p = has left, bit 2p+1 = has right."""
    fp = 0
    for p, v in enumerate(nodes):
        if local_left(v):
            fp |= 1 << (2 * p)
        if local_right(v):
            fp |= 2 << (2 * p)
    return fp


class MicroTable:
    """Lookup table for one micro-tree shape."""

    __slots__ = ("k", "fp", "par", "left", "right", "size", "depth", "c2", "rd",
                 "inord", "inv", "leafcum", "isleaf", "lca")

    def __init__(self, k: int, fp: int):
        self.k = k
        self.fp = fp
        has_l = [(fp >> (2 * p)) & 1 for p in range(k)]
        has_r = [(fp >> (2 * p + 1)) & 1 for p in range(k)]
        par = [-1] * k
        left = [-1] * k
        right = [-1] * k
        pending = []
        for p in range(k):
            if p:
                q = p - 1
                if has_l[q] and left[q] < 0:
                    left[q] = p
                    par[p] = q
                else:
                    if not pending:
                        raise FormatError("fingerprint does not describe a tree")
                    q = pending.pop()
                    right[q] = p
                    par[p] = q
            if has_r[p]:
                pending.append(p)
        if pending or any(has_l[p] and left[p] < 0 for p in range(k)):
            raise FormatError("fingerprint does not describe a tree")
        size = [1] * k
        for p in range(k - 1, 0, -1):
            size[par[p]] += size[p]
        depth = [0] * k
        c2 = [0] * k
        rd = [0] * k
        for p in range(1, k):
            q = par[p]
            depth[p] = depth[q] + 1
            if left[q] == p:
                c2[p] = c2[q] + 1
                rd[p] = rd[q]
            else:
                c2[p] = c2[q]
                rd[p] = rd[q] + 1
        inord = [0] * k
        inv = [0] * k
        stack = []
        x = 0
        pos = 0
        while stack or x >= 0:
            while x >= 0:
                stack.append(x)
                x = left[x]
            x = stack.pop()
            inord[x] = pos
            inv[pos] = x
            pos += 1
            x = right[x]
        isleaf = [left[p] < 0 and right[p] < 0 for p in range(k)]
        leafcum = []
        run = 0
        for p in range(k):
            run += isleaf[p]
            leafcum.append(run)
        # lca[a*k+b]; row a derives from row par[a], which precedes it
        lca = [0] * (k * k)
        for a in range(k):
            end = a + size[a]
            pa = par[a]
            row = a * k
            prow = pa * k
            for b in range(k):
                if a <= b < end:
                    lca[row + b] = a
                elif b < a and b + size[b] > a:
                    lca[row + b] = b
                else:
                    lca[row + b] = lca[prow + b]
        self.par, self.left, self.right = tuple(par), tuple(left), tuple(right)
        self.size, self.depth, self.c2, self.rd = tuple(size), tuple(depth), tuple(c2), tuple(rd)
        self.inord, self.inv = tuple(inord), tuple(inv)
        self.leafcum, self.isleaf, self.lca = tuple(leafcum), tuple(isleaf), tuple(lca)

    def entries(self) -> int:
        return 12 * self.k + self.k * self.k


class TableMemo:
    """Shared memo of micro lookup tables and entropy decodes.

    Inserts are idempotent, so concurrent population is safe; the lock only
    avoids duplicate work.
    """

    def __init__(self):
        self._tables = {}
        self._decodes = {}
        self._lock = threading.Lock()

    def table(self, k: int, fp: int) -> MicroTable:
        key = (k, fp)
        tab = self._tables.get(key)
        if tab is None:
            tab = MicroTable(k, fp)
            with self._lock:
                tab = self._tables.setdefault(key, tab)
        return tab

    def decoded(self, key, compute):
        fp = self._decodes.get(key)
        if fp is None:
            fp = compute()
            with self._lock:
                fp = self._decodes.setdefault(key, fp)
        return fp

    def size_bits(self) -> int:
        entry_bits = OFFSET_BITS
        return (sum(t.entries() for t in self._tables.values()) * entry_bits
                + len(self._decodes) * 64)

    def __len__(self):
        return len(self._tables)


def _shape_from_types(types, ext_root_l, ext_root_r, bnd, bside) -> int:
    """Fingerprint of a micro-tree from its node types in local preorder.

    External child slots (at the root, and at the boundary node) are removed
    before the types are read as a shape.
    """
    fp = 0
    for p, ty in enumerate(types):
        has_l = ty >> 1
        has_r = ty & 1
        if p == 0:
            has_l &= not ext_root_l
            has_r &= not ext_root_r
        if p == bnd:
            if bside == 0:
                has_l = 0
            else:
                has_r = 0
        fp |= (has_l | (has_r << 1)) << (2 * p)
    return fp


# ---------------------------------------------------------------------------
# LCA over the tree of mini-trees


class _TourLCA:
    """Euler tour + blocked sparse tables returning (lca, child toward each end)."""

    BLOCK = 16

    def __init__(self, parent):
        n = len(parent)
        kids = [[] for _ in range(n)]
        for i in range(1, n):
            kids[parent[i]].append(i)
        E = []
        D = []
        F = [0] * n
        if n:
            stack = [(0, 0)]
            depth = [0] * n
            while stack:
                x, k = stack.pop()
                if k == 0:
                    F[x] = len(E)
                E.append(x)
                D.append(depth[x])
                if k < len(kids[x]):
                    stack.append((x, k + 1))
                    c = kids[x][k]
                    depth[c] = depth[x] + 1
                    stack.append((c, 0))
        self.E, self.D, self.F = E, D, F
        B = self.BLOCK
        nb = (len(E) + B - 1) // B
        lm = []
        rm = []
        for b in range(nb):
            lo = b * B
            hi = min(lo + B, len(E))
            best_l = lo
            best_r = lo
            for q in range(lo + 1, hi):
                if D[q] < D[best_l]:
                    best_l = q
                if D[q] <= D[best_r]:
                    best_r = q
            lm.append(best_l)
            rm.append(best_r)
        self.tl = [lm]
        self.tr = [rm]
        span = 1
        while 2 * span <= nb:
            pl, pr = self.tl[-1], self.tr[-1]
            nl = []
            nr = []
            for b in range(nb - 2 * span + 1):
                x, y = pl[b], pl[b + span]
                nl.append(x if D[x] <= D[y] else y)
                x, y = pr[b], pr[b + span]
                nr.append(y if D[y] <= D[x] else x)
            self.tl.append(nl)
            self.tr.append(nr)
            span *= 2

    def _scan(self, lo, hi, best, rightmost):
        D = self.D
        for q in range(lo, hi + 1):
            if best < 0 or D[q] < D[best] or (rightmost and D[q] == D[best]):
                best = q
        return best

    def _argmin(self, i, j, rightmost):
        B = self.BLOCK
        bi, bj = i // B, j // B
        D = self.D
        if bj - bi <= 1:
            return self._scan(i, j, -1, rightmost)
        best = self._scan(i, bi * B + B - 1, -1, rightmost)
        x, y = bi + 1, bj - 1
        k = (y - x + 1).bit_length() - 1
        tab = self.tr[k] if rightmost else self.tl[k]
        for q in (tab[x], tab[y - (1 << k) + 1]):
            if D[q] < D[best] or (D[q] == D[best] and (q > best) == rightmost):
                best = q
        return self._scan(bj * B, j, best, rightmost)

    def query(self, a, b):
        """Returns (lca, child of lca toward a or -1, child toward b or -1)."""
        if a == b:
            return a, -1, -1
        i, j = self.F[a], self.F[b]
        swap = i > j
        if swap:
            i, j = j, i
        E = self.E
        ql = self._argmin(i, j, False)
        lca = E[ql]
        if lca == E[i]:
            ce, cl = -1, E[self._argmin(i, j, True) + 1]
        else:
            ce = E[ql - 1]
            cl = E[self._argmin(i, j, True) + 1]
        return (lca, cl, ce) if swap else (lca, ce, cl)

    def size_bits(self) -> int:
        w = max(len(self.E).bit_length(), 1)
        tables = sum(len(t) for t in self.tl) + sum(len(t) for t in self.tr)
        return (2 * len(self.E) + len(self.F) + tables) * w


# ---------------------------------------------------------------------------
# the structure

_MINI_FIELDS = ("P", "Iin", "depth", "c2", "rd", "par", "first", "rootL", "rootR",
                "bnode", "bside", "bchild", "holeL", "holeR", "hole", "leafL", "leafH",
                "leafbefore", "msize", "thr_pre", "thr_in", "b_mlp")
_MICRO_FIELDS = ("k", "rootL", "rootR", "bnd", "bside", "bchild", "par", "depth", "c2",
                 "rd", "pre", "inn", "holeL", "holeR", "hole", "leafL", "leafH",
                 "leafbefore")
_SIGNED = {("mini", "par"), ("mini", "rootL"), ("mini", "rootR"), ("mini", "bnode"),
           ("mini", "bchild"), ("micro", "rootL"), ("micro", "rootR"),
           ("micro", "bchild"), ("micro", "par")}

STRE_VERSION = 1


class SuccinctTree:
    """Queryable two-level representation of a binary tree.

    Build with :meth:`build`; node ids are opaque integers (see module doc).
    """

    def __init__(self):
        self.n = 0
        self.mode = "plain"
        self.alpha = None
        self.mini_cap = 0
        self.micro_cap = 0
        self.mini = {}
        self.micro = {}
        self.payload = []  # plain: fingerprints; entropy: (code, nbits)
        self.memo = TableMemo()

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, t: BinaryTreeModel, params=None, mini_cap=None, micro_cap=None,
              decomposition: Optional[Decomposition] = None, memo: Optional[TableMemo] = None):
        """Build from a model tree.  ``params`` is None/"plain" or AlphaParams."""
        if t.m < 1:
            raise DomainError("cannot build an empty tree")
        self = cls()
        if memo is not None:
            self.memo = memo
        alpha = None
        if params is not None and params != "plain":
            alpha = params if isinstance(params, AlphaParams) else AlphaParams(*params)
        dmini, dmicro = default_caps(t.m, alpha)
        dec = decomposition or decompose(t, mini_cap or dmini, micro_cap or dmicro)
        self.n = t.m
        self.mode = "plain" if alpha is None else "entropy"
        self.alpha = alpha
        self.mini_cap, self.micro_cap = dec.mini_cap, dec.micro_cap
        self._fill(t, dec)
        self._prepare()
        return self

    def _fill(self, t: BinaryTreeModel, dec: Decomposition):
        n = t.m
        left, right, parent = t.left, t.right, t.parent
        pre, size = t.pre_rank, t.size
        depth, ld, rd = t.depth, t.ldepth, t.rdepth
        isleaf = t.is_leaf
        order = t.preorder
        mini_of, micro_of, off = dec.mini_of, dec.micro_of, dec.offset
        nm = dec.n_m
        nmicro = dec.micro_count

        leafcum = [0] * (n + 1)
        run = 0
        for k, v in enumerate(order, 1):
            run += isleaf[v]
            leafcum[k] = run

        def gleaves(x):
            p = pre[x]
            return leafcum[p + size[x] - 1] - leafcum[p - 1]

        cnt = [0] * nm
        lcnt = [0] * nm
        mlp = [0] * (n + 1)
        mlb = [0] * (n + 1)
        for v in order:
            m = mini_of[v]
            mlp[v] = cnt[m]
            cnt[m] += 1
            mlb[v] = lcnt[m]
            if isleaf[v]:
                lcnt[m] += 1
        msize = cnt
        cnt = [0] * nm
        mli = [0] * (n + 1)
        for v in range(1, n + 1):
            m = mini_of[v]
            mli[v] = cnt[m]
            cnt[m] += 1
        mls = [1] * (n + 1)
        mll = [1 if x else 0 for x in isleaf]
        for v in reversed(order):
            p = parent[v]
            if p and mini_of[p] == mini_of[v]:
                mls[p] += mls[v]
                mll[p] += mll[v]

        first = [0] * nm
        g = 0
        for m in range(nm):
            first[m] = g
            g += len(dec.micros[m])

        M = {f: [0] * nm for f in _MINI_FIELDS}
        for m, comp in enumerate(dec.minis):
            r = comp.root
            M["P"][m] = pre[r]
            M["Iin"][m] = min(comp.nodes)
            M["depth"][m], M["c2"][m], M["rd"][m] = depth[r], ld[r], rd[r]
            p = parent[r]
            M["par"][m] = pack_id(micro_of[p], off[p]) if p else -1
            M["first"][m] = first[m]
            for side, c in (("L", left[r]), ("R", right[r])):
                if c and mini_of[c] != m:
                    M["root" + side][m] = mini_of[c]
                    M["hole" + side][m] = size[c]
                    if side == "L":
                        M["leafL"][m] = gleaves(c)
                else:
                    M["root" + side][m] = -1
            M["leafbefore"][m] = leafcum[pre[r] - 1]
            M["msize"][m] = msize[m]
            b = comp.boundary
            if b is None:
                M["bnode"][m] = -1
                M["bchild"][m] = -1
                M["thr_pre"][m] = msize[m]
                M["thr_in"][m] = msize[m]
                M["b_mlp"][m] = msize[m]
            else:
                c = comp.external
                s = 0 if left[b] == c else 1
                M["bnode"][m] = pack_id(micro_of[b], off[b])
                M["bside"][m] = s
                M["bchild"][m] = mini_of[c]
                M["hole"][m] = size[c]
                M["leafH"][m] = gleaves(c)
                M["thr_pre"][m] = mlp[b] + 1 if s == 0 else mlp[b] + mls[b]
                # a hole left of the first mini node lies outside the span
                M["thr_in"][m] = (mli[b] or msize[m]) if s == 0 else mli[b] + 1
                M["b_mlp"][m] = mlp[b]

        U = {f: [0] * nmicro for f in _MICRO_FIELDS}
        payload = [None] * nmicro
        model = arith.StaticModel(self.alpha.by_type()) if self.alpha else None
        g = 0
        for m in range(nm):
            base = first[m]
            r_m = dec.minis[m].root
            for comp in dec.micros[m]:
                nodes = comp.nodes
                x = comp.root
                k = len(nodes)
                U["k"][g] = k

                def ll(v, g=g):
                    c = left[v]
                    return c and micro_of[c] == g

                def rr(v, g=g):
                    c = right[v]
                    return c and micro_of[c] == g

                fp = fingerprint_of(nodes, off, ll, rr)
                for side, c in (("L", left[x]), ("R", right[x])):
                    if not c or micro_of[c] == g:
                        U["root" + side][g] = 0
                    elif mini_of[c] != m:
                        U["root" + side][g] = -1
                    else:
                        U["root" + side][g] = micro_of[c] - base + 1
                        U["hole" + side][g] = mls[c]
                        if side == "L":
                            U["leafL"][g] = mll[c]
                y = comp.boundary
                if y is None:
                    U["bnd"][g] = 0
                    U["bchild"][g] = 0
                else:
                    c = comp.external
                    U["bnd"][g] = off[y] + 1
                    U["bside"][g] = 0 if left[y] == c else 1
                    if mini_of[c] != m:
                        U["bchild"][g] = -1
                    else:
                        U["bchild"][g] = micro_of[c] - base + 1
                        U["hole"][g] = mls[c]
                        U["leafH"][g] = mll[c]
                p = parent[x]
                U["par"][g] = pack_id(micro_of[p] - base, off[p]) if x != r_m else -1
                U["depth"][g] = depth[x] - depth[r_m]
                U["c2"][g] = ld[x] - ld[r_m]
                U["rd"][g] = rd[x] - rd[r_m]
                U["pre"][g] = mlp[x]
                U["inn"][g] = min(mli[v] for v in nodes)
                U["leafbefore"][g] = mlb[x]
                if model is None:
                    payload[g] = fp
                else:
                    types = [(2 if left[v] else 0) + (1 if right[v] else 0) for v in nodes]
                    payload[g] = arith.encode(types, model)
                g += 1

        self.mini = M
        self.micro = U
        self.payload = payload

        # P/A/B: entry marks of mini-trees in global inorder and preorder
        mo = np.asarray(mini_of, dtype=np.int64)
        uo = np.asarray(micro_of, dtype=np.int64)
        first_arr = np.asarray(first, dtype=np.int64)
        inorder_seq = mo[1:]
        preorder_nodes = np.asarray(order, dtype=np.int64)
        self.A_in, self.B_in = _runs(inorder_seq)
        self.A_pre, self.B_pre = _runs(mo[preorder_nodes])
        # micro level: mini-local sequences concatenated in mini order
        ids_in = np.argsort(mo[1:], kind="stable") + 1
        self.Am_in, self.Bm_in = _runs(uo[ids_in] - first_arr[mo[ids_in]], mo[ids_in])
        ids_pre = preorder_nodes[np.argsort(mo[preorder_nodes], kind="stable")]
        self.Am_pre, self.Bm_pre = _runs(uo[ids_pre] - first_arr[mo[ids_pre]], mo[ids_pre])

    def _prepare(self):
        """Derive query-time caches from the stored fields."""
        M, U = self.mini, self.micro
        nm = len(M["P"])
        nmicro = len(U["k"])
        first = M["first"]
        mic_mini = [0] * nmicro
        for m in range(nm):
            end = first[m + 1] if m + 1 < nm else nmicro
            for g in range(first[m], end):
                mic_mini[g] = m
        self._mic_mini = mic_mini
        moff = [0] * nm
        run = 0
        for m in range(nm):
            moff[m] = run
            run += M["msize"][m]
        self._moff = moff
        anc = [0] * nmicro
        upar = U["par"]
        for g in range(nmicro):
            rel = g - first[mic_mini[g]]
            p = upar[g]
            anc[g] = (1 << rel) | (anc[first[mic_mini[g]] + (p >> OFFSET_BITS)] if p >= 0 else 0)
        self._anc = anc
        mpar = M["par"]
        self._mini_lca = _TourLCA([-1] + [mic_mini[mpar[m] >> OFFSET_BITS] for m in range(1, nm)])
        self._luts = [None] * nmicro
        if self.mode == "entropy":
            self._model = arith.StaticModel(self.alpha.by_type())

    # -- micro tables -------------------------------------------------------

    def _lut(self, g) -> MicroTable:
        tab = self._luts[g]
        if tab is None:
            U = self.micro
            k = U["k"][g]
            if self.mode == "plain":
                fp = self.payload[g]
            else:
                code, nbits = self.payload[g]
                sig = (U["rootL"][g] != 0, U["rootR"][g] != 0, U["bnd"][g] - 1, U["bside"][g])
                fp = self.memo.decoded(
                    (k, code, nbits) + sig,
                    lambda: _shape_from_types(arith.decode(code, nbits, k, self._model), *sig))
            tab = self.memo.table(k, fp)
            self._luts[g] = tab
        return tab

    def micro_shape(self, g) -> MicroTable:
        return self._lut(g)

    # -- id handling --------------------------------------------------------

    def _check(self, v):
        g = v >> OFFSET_BITS
        if not isinstance(v, (int, np.integer)) or v < 0 or g >= len(self._luts) \
                or (v & OFFSET_MASK) >= self.micro["k"][g]:
            raise RangeError(f"invalid node id {v!r}")

    def split_id(self, v):
        """(mini index, micro index within the mini, local preorder offset)."""
        self._check(v)
        g = v >> OFFSET_BITS
        m = self._mic_mini[g]
        return m, g - self.mini["first"][m], v & OFFSET_MASK

    def node_ids(self):
        U = self.micro
        for g, k in enumerate(U["k"]):
            for p in range(k):
                yield (g << OFFSET_BITS) | p

    def root(self) -> int:
        return 0

    # -- positional helpers ---------------------------------------------------

    def _thr_pre(self, g, tab):
        b = self.micro["bnd"][g] - 1
        if b < 0:
            return MAX_MICRO_CAP + 1
        return b + 1 if self.micro["bside"][g] == 0 else b + tab.size[b]

    def _thr_in(self, g, tab):
        b = self.micro["bnd"][g] - 1
        if b < 0:
            return MAX_MICRO_CAP + 1
        thr = tab.inord[b] + self.micro["bside"][g]
        return thr or MAX_MICRO_CAP + 1

    def _mlp(self, g, p, tab):
        U = self.micro
        q = U["pre"][g] + p
        if p:
            q += U["holeL"][g]
            if p >= self._thr_pre(g, tab):
                q += U["hole"][g]
        return q

    def _mls(self, g, p, tab):
        """Subtree size of node (g, p) counting only nodes of its mini-tree."""
        U = self.micro
        s = tab.size[p]
        if p == 0:
            s += U["holeL"][g] + U["holeR"][g]
        b = U["bnd"][g] - 1
        if b >= p and b < p + tab.size[p]:
            s += U["hole"][g]
        return s

    # -- rank / select ----------------------------------------------------------

    def node_rank_preorder(self, v: int) -> int:
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        m = self._mic_mini[g]
        M = self.mini
        q = self._mlp(g, p, self._lut(g))
        o = q
        if q:
            o += M["holeL"][m]
            if q >= M["thr_pre"][m]:
                o += M["hole"][m]
        return M["P"][m] + o

    def node_select_preorder(self, k: int) -> int:
        if not 1 <= k <= self.n:
            raise RangeError(f"preorder rank {k} outside 1..{self.n}")
        M, U = self.mini, self.micro
        m = self.B_pre[self.A_pre.rank1(k) - 1]
        q = k - M["P"][m]
        if q:
            q -= M["holeL"][m]
            if q >= M["thr_pre"][m]:
                q -= M["hole"][m]
        g = M["first"][m] + self.Bm_pre[self.Am_pre.rank1(self._moff[m] + q + 1) - 1]
        t = q - U["pre"][g]
        if t:
            t -= U["holeL"][g]
            if t >= self._thr_pre(g, self._lut(g)):
                t -= U["hole"][g]
        return (g << OFFSET_BITS) | t

    def node_rank_inorder(self, v: int) -> int:
        """preorder(v) + c1(v) - c2(v) with c1 = size of the left subtree, c2 = Ldepth."""
        c = self.left_child(v)
        c1 = self.subtree_size(c) if c is not None else 0
        return self.node_rank_preorder(v) + c1 - self.ldepth(v)

    def node_select_inorder(self, k: int) -> int:
        if not 1 <= k <= self.n:
            raise RangeError(f"inorder rank {k} outside 1..{self.n}")
        M, U = self.mini, self.micro
        m = self.B_in[self.A_in.rank1(k) - 1]
        q = k - M["Iin"][m]
        if q >= M["thr_in"][m]:
            q -= M["hole"][m]
        g = M["first"][m] + self.Bm_in[self.Am_in.rank1(self._moff[m] + q + 1) - 1]
        tab = self._lut(g)
        t = q - U["inn"][g]
        if t >= self._thr_in(g, tab):
            t -= U["hole"][g]
        return (g << OFFSET_BITS) | tab.inv[t]

    # -- navigation ---------------------------------------------------------------

    def parent(self, v: int):
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        if p:
            return (g << OFFSET_BITS) | self._lut(g).par[p]
        m = self._mic_mini[g]
        x = self.micro["par"][g]
        if x >= 0:
            return ((self.mini["first"][m] + (x >> OFFSET_BITS)) << OFFSET_BITS) | (x & OFFSET_MASK)
        x = self.mini["par"][m]
        return x if x >= 0 else None

    def _child(self, v, side):
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        tab = self._lut(g)
        c = (tab.left if side == 0 else tab.right)[p]
        if c >= 0:
            return (g << OFFSET_BITS) | c
        U = self.micro
        M = self.mini
        m = self._mic_mini[g]
        if p == 0:
            code = U["rootL" if side == 0 else "rootR"][g]
        elif p == U["bnd"][g] - 1 and U["bside"][g] == side:
            code = U["bchild"][g]
        else:
            return None
        if code > 0:
            return (M["first"][m] + code - 1) << OFFSET_BITS
        if code == 0:
            return None
        # the child lies in another mini-tree
        if p == 0 and g == M["first"][m]:
            c = M["rootL" if side == 0 else "rootR"][m]
        else:
            c = M["bchild"][m]
        return M["first"][c] << OFFSET_BITS

    def left_child(self, v: int):
        return self._child(v, 0)

    def right_child(self, v: int):
        return self._child(v, 1)

    def is_leaf(self, v: int) -> bool:
        return self.left_child(v) is None and self.right_child(v) is None

    def subtree_size(self, v: int) -> int:
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        tab = self._lut(g)
        mls = self._mls(g, p, tab)
        m = self._mic_mini[g]
        M = self.mini
        s = mls
        if p == 0 and g == M["first"][m]:
            s += M["holeL"][m] + M["holeR"][m]
        if M["bnode"][m] >= 0:
            q = self._mlp(g, p, tab)
            if q <= M["b_mlp"][m] < q + mls:
                s += M["hole"][m]
        return s

    def depth(self, v: int) -> int:
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        return self.mini["depth"][self._mic_mini[g]] + self.micro["depth"][g] + self._lut(g).depth[p]

    def ldepth(self, v: int) -> int:
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        return self.mini["c2"][self._mic_mini[g]] + self.micro["c2"][g] + self._lut(g).c2[p]

    def rdepth(self, v: int) -> int:
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        return self.mini["rd"][self._mic_mini[g]] + self.micro["rd"][g] + self._lut(g).rd[p]

    def leaf_rank(self, v: int) -> int:
        """Number of leaves whose preorder rank is at most that of v."""
        self._check(v)
        g, p = v >> OFFSET_BITS, v & OFFSET_MASK
        tab = self._lut(g)
        U, M = self.micro, self.mini
        m = self._mic_mini[g]
        local = tab.leafcum[p]
        if tab.isleaf[0] and (U["rootL"][g] or U["rootR"][g]):
            local -= 1
        b = U["bnd"][g] - 1
        if 0 <= b <= p and tab.isleaf[b]:
            local -= 1
        thr = self._thr_pre(g, tab)
        mini_rank = U["leafbefore"][g] + local
        if p:
            mini_rank += U["leafL"][g]
            if p >= thr:
                mini_rank += U["leafH"][g]
        q = self._mlp(g, p, tab)
        r = M["leafbefore"][m] + mini_rank
        if q:
            r += M["leafL"][m]
            if q >= M["thr_pre"][m]:
                r += M["leafH"][m]
        return r

    # -- lca ------------------------------------------------------------------------

    def _lca_same_mini(self, u, v, m):
        gu, gv = u >> OFFSET_BITS, v >> OFFSET_BITS
        if gu == gv:
            tab = self._lut(gu)
            return (gu << OFFSET_BITS) | tab.lca[(u & OFFSET_MASK) * tab.k + (v & OFFSET_MASK)]
        base = self.mini["first"][m]
        anc = self._anc
        au, av = anc[gu], anc[gv]
        L = (au & av).bit_length() - 1
        upar = self.micro["par"]
        g = base + L
        if gu == g:
            pu = u & OFFSET_MASK
        else:
            x = au >> (L + 1)
            cu = L + 1 + (x & -x).bit_length() - 1
            pu = upar[base + cu] & OFFSET_MASK
        if gv == g:
            pv = v & OFFSET_MASK
        else:
            x = av >> (L + 1)
            cv = L + 1 + (x & -x).bit_length() - 1
            pv = upar[base + cv] & OFFSET_MASK
        tab = self._lut(g)
        return (g << OFFSET_BITS) | tab.lca[pu * tab.k + pv]

    def lca(self, u: int, v: int) -> int:
        self._check(u)
        self._check(v)
        mic_mini = self._mic_mini
        mu, mv = mic_mini[u >> OFFSET_BITS], mic_mini[v >> OFFSET_BITS]
        if mu == mv:
            return self._lca_same_mini(u, v, mu)
        L, cu, cv = self._mini_lca.query(mu, mv)
        mpar = self.mini["par"]
        if cu >= 0:
            u = mpar[cu]
        if cv >= 0:
            v = mpar[cv]
        return self._lca_same_mini(u, v, L)

    # -- accounting -------------------------------------------------------------------

    @property
    def n_m(self) -> int:
        return len(self.mini["P"])

    @property
    def micro_count(self) -> int:
        return len(self.micro["k"])

    def payload_bits(self) -> int:
        if self.mode == "plain":
            return 2 * sum(self.micro["k"])
        return sum(nb for _, nb in self.payload)

    def size_report(self) -> dict:
        U, M = self.micro, self.mini
        micro_dir = sum(packed_bits(U[f]) for f in _MICRO_FIELDS)
        if self.mode == "entropy":
            micro_dir += packed_bits([nb for _, nb in self.payload])
        first = M["first"]
        nmicro = len(U["k"])
        # ancestor masks: micro with relative index i keeps i + 1 bits
        micro_dir += sum(g - first[self._mic_mini[g]] + 1 for g in range(nmicro))
        mini_dir = sum(packed_bits(M[f]) for f in _MINI_FIELDS) + self._mini_lca.size_bits()
        pab = 0
        for bv, blist in ((self.A_in, self.B_in), (self.A_pre, self.B_pre),
                          (self.Am_in, self.Bm_in), (self.Am_pre, self.Bm_pre)):
            rep = bv.size_report()
            pab += rep["payload_bits"] + rep["directory_bits"] + packed_bits(blist)
        payload = self.payload_bits()
        total = payload + micro_dir + mini_dir + pab
        return {
            "n": self.n,
            "mode": self.mode,
            "mini_count": self.n_m,
            "micro_count": nmicro,
            "mini_cap": self.mini_cap,
            "micro_cap": self.micro_cap,
            "payload_bits": payload,
            "micro_directory_bits": micro_dir,
            "mini_directory_bits": mini_dir,
            "pab_bits": pab,
            "total_bits": total,
            "overhead_bits": total - payload,
            "shared_cache_bits": self.memo.size_bits(),
        }

    # -- serialization ------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        out = [struct.pack("<IQBII", STRE_VERSION, self.n, 1 if self.mode == "entropy" else 0,
                           self.mini_cap, self.micro_cap)]
        if self.mode == "entropy":
            for x in self.alpha.as_tuple():
                out.append(struct.pack("<QQ", x.numerator, x.denominator))
        for f in _MINI_FIELDS:
            out.append(pack_ints(self.mini[f], signed=("mini", f) in _SIGNED))
        for f in _MICRO_FIELDS:
            out.append(pack_ints(self.micro[f], signed=("micro", f) in _SIGNED))
        if self.mode == "plain":
            out.append(pack_blob(_pack_bitstream(self.payload, [2 * k for k in self.micro["k"]])))
        else:
            lengths = [nb for _, nb in self.payload]
            out.append(pack_ints(lengths))
            out.append(pack_blob(_pack_bitstream([c for c, _ in self.payload], lengths)))
        for bv, blist in ((self.A_in, self.B_in), (self.A_pre, self.B_pre),
                          (self.Am_in, self.Bm_in), (self.Am_pre, self.Bm_pre)):
            out.append(bv.to_bytes())
            out.append(pack_ints(blist))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, buf, offset: int = 0, memo: Optional[TableMemo] = None):
        """Returns (SuccinctTree, new offset)."""
        self = cls()
        if memo is not None:
            self.memo = memo
        try:
            version, n, ent, mini_cap, micro_cap = struct.unpack_from("<IQBII", buf, offset)
        except struct.error:
            raise FormatError("truncated tree header") from None
        if version != STRE_VERSION:
            raise FormatError(f"unsupported tree section version {version}")
        offset += struct.calcsize("<IQBII")
        self.n, self.mini_cap, self.micro_cap = n, mini_cap, micro_cap
        self.mode = "entropy" if ent else "plain"
        if ent:
            vals = []
            for _ in range(4):
                num, den = struct.unpack_from("<QQ", buf, offset)
                offset += 16
                vals.append(Fraction(num, den))
            self.alpha = AlphaParams(*vals)
        for f in _MINI_FIELDS:
            self.mini[f], offset = unpack_ints(buf, offset)
        for f in _MICRO_FIELDS:
            self.micro[f], offset = unpack_ints(buf, offset)
        ks = self.micro["k"]
        if sum(ks) != n:
            raise FormatError("micro sizes do not add up to n")
        if self.mode == "plain":
            blob, offset = unpack_blob(buf, offset)
            self.payload = _unpack_bitstream(blob, [2 * k for k in ks])
        else:
            lengths, offset = unpack_ints(buf, offset)
            blob, offset = unpack_blob(buf, offset)
            codes = _unpack_bitstream(blob, lengths)
            self.payload = list(zip(codes, lengths))
        pairs = []
        for _ in range(4):
            bv, offset = SparseBitVector.from_bytes(buf, offset)
            blist, offset = unpack_ints(buf, offset)
            pairs.append((bv, blist))
        (self.A_in, self.B_in), (self.A_pre, self.B_pre), \
            (self.Am_in, self.Bm_in), (self.Am_pre, self.Bm_pre) = pairs
        self._prepare()
        return self, offset


def _runs(seq, segment=None):
    """Mark run starts of ``seq`` (also at every change of ``segment``)."""
    seq = np.asarray(seq)
    starts = np.ones(seq.size, dtype=np.uint8)
    if seq.size > 1:
        change = seq[1:] != seq[:-1]
        if segment is not None:
            segment = np.asarray(segment)
            change |= segment[1:] != segment[:-1]
        starts[1:] = change
    return SparseBitVector(starts), seq[starts.astype(bool)].tolist()


def _pack_bitstream(values, widths) -> bytes:
    acc = 0
    pos = 0
    # chunked to keep the big-int shifts short
    chunks = []
    for v, w in zip(values, widths):
        acc |= v << pos
        pos += w
        if pos >= 4096:
            full = pos // 8
            chunks.append((acc & ((1 << (8 * full)) - 1)).to_bytes(full, "little"))
            acc >>= 8 * full
            pos -= 8 * full
    chunks.append(acc.to_bytes((pos + 7) // 8, "little"))
    return b"".join(chunks)


def _unpack_bitstream(blob, widths):
    total = sum(widths)
    if len(blob) * 8 < total:
        raise FormatError("payload bit stream truncated")
    out = []
    acc = 0
    avail = 0
    i = 0
    step = 512
    for w in widths:
        while avail < w:
            acc |= int.from_bytes(blob[i:i + step], "little") << avail
            avail += 8 * len(blob[i:i + step])
            i += step
        out.append(acc & ((1 << w) - 1))
        acc >>= w
        avail -= w
    return out
