"""Range top-2 encoding.

For every node u, the inner spines lispine(u) (right spine of the left
child) and rispine(u) (left spine of the right child) hold the candidates
for the second minimum of any range whose minimum is u.  M_u records how
the two spines interleave in decreasing value order: 0 for an element of
lispine, 1 for rispine, last bit dropped.  M concatenates the M_u in inorder.

The start of M_u is computed from tree quantities alone:

    sum_{j<u'} m_j = u' - L_root - l_u' + Ldepth(u') - Rdepth(u') + 1 + leftleaves(u')

with u' = u - 1 the 0-based inorder position and L_root the length of the
left spine of the root.
"""

import math
import struct
from fractions import Fraction

from .bits import BitVector
from .errors import DomainError, FormatError, RangeError
from .succinct_tree import AlphaParams, SuccinctTree, TableMemo, type_counts
from .tree_model import ArrayInput, BinaryTreeModel, build_cartesian

GAMMA = 2 + math.log2(1 + math.sqrt(2))
X_STAR = 1 - math.sqrt(2) / 2


def h_of_x(x) -> float:
    """Bits per node of the capped-alpha scheme when a fraction x of nodes are leaves."""
    x = float(x)
    if not 0 < x < 0.5:
        raise DomainError("x must lie in (0, 1/2)")
    return 2 * x * math.log2(1 / x) + (1 - 2 * x) * math.log2(2 / (1 - 2 * x)) + x + 1


def h_argmax(step: float = 1e-5):
    """Grid scan of h_of_x over (0, 1/2); returns (x, H(x))."""
    best = (0.0, -1.0)
    k = 1
    while k * step < 0.5:
        x = k * step
        h = h_of_x(x)
        if h > best[1]:
            best = (x, h)
        k += 1
    return best


class MergeVector:
    """Bitvector M with rank/select."""

    def __init__(self, bits: BitVector):
        self.bits = bits

    def __len__(self):
        return len(self.bits)

    def to_string(self) -> str:
        return self.bits.to_string()

    def to_bytes(self) -> bytes:
        return self.bits.to_bytes()

    @classmethod
    def from_bytes(cls, buf, offset=0):
        bv, offset = BitVector.from_bytes(buf, offset)
        return cls(bv), offset


def merge_bits(t: BinaryTreeModel, values, u: int):
    """M_u as a list of bits (the full interleaving minus its last bit)."""
    left, right = t.left, t.right
    lis = []
    x = left[u]
    while x:
        lis.append(x)
        x = right[x]
    ris = []
    x = right[u]
    while x:
        ris.append(x)
        x = left[x]
    # spines run top to bottom with increasing values; merge from the bottoms
    out = []
    i, j = len(lis) - 1, len(ris) - 1
    while i >= 0 and j >= 0:
        if values[lis[i] - 1] > values[ris[j] - 1]:
            out.append(0)
            i -= 1
        else:
            out.append(1)
            j -= 1
    out.extend([0] * (i + 1))
    out.extend([1] * (j + 1))
    return out[:-1]


def build_merge_vector(t: BinaryTreeModel, a) -> MergeVector:
    a = ArrayInput.coerce(a)
    if a.n != t.m:
        raise ValueError("array and tree sizes differ")
    values = a.values.tolist()
    bits = []
    for u in range(1, t.m + 1):
        bits.extend(merge_bits(t, values, u))
    return MergeVector(BitVector(bits))


def analytic_measure(counts, alpha: AlphaParams) -> float:
    """sum n_i lg(1/a_i) + n + n_0 for type counts indexed by type code."""
    n = sum(counts)
    return alpha.measure(counts) + n + counts[0]


class Rt2qEncoding:
    def __init__(self, tree: SuccinctTree, merge: MergeVector, leaves: int):
        self.tree = tree
        self.merge = merge
        self.n = tree.n
        self.leaves = leaves
        st = tree
        self._L_root = st.depth(st.node_select_inorder(1)) + 1

    @property
    def alpha(self):
        return self.tree.alpha

    # -- offsets ------------------------------------------------------------

    def _spine_lengths(self, u: int, x: int):
        """(l_u, r_u) from depth differences to the inorder neighbours."""
        st = self.tree
        d = st.depth(x)
        lu = st.depth(st.node_select_inorder(u - 1)) - d if st.left_child(x) is not None else 0
        ru = st.depth(st.node_select_inorder(u + 1)) - d if st.right_child(x) is not None else 0
        return lu, ru

    def _leftleaves(self, x: int) -> int:
        """Leaves with inorder rank smaller than that of node x."""
        st = self.tree
        c = st.left_child(x)
        if c is not None:
            last = st.node_select_preorder(st.node_rank_preorder(x) + st.subtree_size(c))
            return st.leaf_rank(last)
        return st.leaf_rank(x) - (1 if st.is_leaf(x) else 0)

    def merge_offset(self, u: int) -> int:
        """Start of M_u inside M (inorder u is 1-based)."""
        if not 1 <= u <= self.n:
            raise RangeError(f"node {u} outside 1..{self.n}")
        st = self.tree
        x = st.node_select_inorder(u)
        lu, _ = self._spine_lengths(u, x)
        up = u - 1
        return up - self._L_root - lu + st.ldepth(x) - st.rdepth(x) + 1 + self._leftleaves(x)

    def segment_length(self, u: int) -> int:
        st = self.tree
        lu, ru = self._spine_lengths(u, st.node_select_inorder(u))
        return max(lu + ru - 1, 0)

    # -- queries ---------------------------------------------------------------

    def _rmq(self, i, j):
        st = self.tree
        if i == j:
            return i
        return st.node_rank_inorder(st.lca(st.node_select_inorder(i), st.node_select_inorder(j)))

    def query(self, i: int, j: int):
        if not (isinstance(i, int) and isinstance(j, int)) or not 1 <= i < j <= self.n:
            raise RangeError(f"range ({i},{j}) invalid for n={self.n}")
        st = self.tree
        sel = st.node_select_inorder
        xi, xj = sel(i), sel(j)
        xu = st.lca(xi, xj)
        u = st.node_rank_inorder(xu)
        if u == i:
            return u, (j if u + 1 == j else st.node_rank_inorder(st.lca(sel(u + 1), xj)))
        if u == j:
            return u, (i if i == u - 1 else st.node_rank_inorder(st.lca(xi, sel(u - 1))))
        xp, xn = sel(u - 1), sel(u + 1)
        xv = st.lca(xi, xp)
        xw = st.lca(xn, xj)
        du = st.depth(xu)
        d_prev = st.depth(xp)
        d_next = st.depth(xn)
        kv = 1 + d_prev - st.depth(xv)
        kw = 1 + d_next - st.depth(xw)
        lu = d_prev - du
        mu = lu + d_next - du - 1
        delta = (u - 1) - self._L_root - lu + st.ldepth(xu) - st.rdepth(xu) + 1 \
            + self._leftleaves(xu)
        M = self.merge.bits
        ones_before = M.rank1(delta)
        c1 = M.rank1(delta + mu) - ones_before
        if kv > mu - c1:
            second = xv
        elif kw > c1:
            second = xw
        else:
            p0 = M.select0(delta - ones_before + kv)
            p1 = M.select1(ones_before + kw)
            second = xv if p0 > p1 else xw
        return u, st.node_rank_inorder(second)

    # -- accounting ---------------------------------------------------------------

    def analytic_measure(self) -> float:
        return self._measure

    def size_report(self) -> dict:
        rep = dict(self.tree.size_report())
        mrep = self.merge.bits.size_report()
        rep["merge_payload_bits"] = mrep["payload_bits"]
        rep["merge_directory_bits"] = mrep["directory_bits"]
        rep["total_bits"] += mrep["payload_bits"] + mrep["directory_bits"]
        rep["analytic_measure_bits"] = self._measure
        rep["leaves"] = self.leaves
        return rep

    def section_bytes(self) -> bytes:
        return struct.pack("<QQ", self.n, self.leaves) + self.merge.to_bytes()

    @classmethod
    def from_sections(cls, tree: SuccinctTree, body: bytes) -> "Rt2qEncoding":
        if len(body) < 16:
            raise FormatError("truncated RT2Q section")
        n, leaves = struct.unpack_from("<QQ", body, 0)
        if n != tree.n:
            raise FormatError("RT2Q length does not match the tree section")
        merge, _ = MergeVector.from_bytes(body, 16)
        e = cls(tree, merge, leaves)
        e._measure = _measure_from_tree(tree, leaves)
        return e


def _measure_from_tree(tree: SuccinctTree, leaves: int) -> float:
    n = tree.n
    # n_2 = n_0 - 1 on every binary tree; left/right-only nodes share one probability
    counts = [leaves, 0, n - 2 * leaves + 1, leaves - 1]
    return analytic_measure(counts, tree.alpha)


def capped_alpha(t: BinaryTreeModel) -> AlphaParams:
    return AlphaParams.capped(Fraction(t.leaf_count, t.m))


def encode(a, break_ties: bool = False, mini_cap=None, micro_cap=None,
           memo: TableMemo = None) -> Rt2qEncoding:
    a = ArrayInput.coerce(a, break_ties=break_ties)
    if a.n < 2:
        raise RangeError("range top-2 needs at least two elements")
    t = build_cartesian(a)
    alpha = capped_alpha(t)
    tree = SuccinctTree.build(t, alpha, mini_cap, micro_cap, memo=memo)
    e = Rt2qEncoding(tree, build_merge_vector(t, a), t.leaf_count)
    e._measure = analytic_measure(type_counts(t), alpha)
    return e


def query(e: Rt2qEncoding, i: int, j: int):
    return e.query(i, j)


def merge_offset(e: Rt2qEncoding, u: int) -> int:
    return e.merge_offset(u)
