"""Range-minimum encoding: the Cartesian tree in succinct form.

rmq(i, j) = inorder_rank(lca(inorder_select(i), inorder_select(j))).
The encoding keeps only the tree shape, never the array values.
"""

import struct

from .errors import FormatError, RangeError
from .succinct_tree import AlphaParams, SuccinctTree, TableMemo
from .tree_model import ArrayInput, build_cartesian


class RmqEncoding:
    def __init__(self, tree: SuccinctTree):
        self.tree = tree
        self.n = tree.n

    @property
    def mode(self) -> str:
        return self.tree.mode

    @property
    def alpha(self):
        return self.tree.alpha

    def query(self, i: int, j: int) -> int:
        if not (isinstance(i, int) and isinstance(j, int)) or not 1 <= i <= j <= self.n:
            raise RangeError(f"range ({i},{j}) invalid for n={self.n}")
        st = self.tree
        if i == j:
            return i
        return st.node_rank_inorder(st.lca(st.node_select_inorder(i), st.node_select_inorder(j)))

    def size_report(self) -> dict:
        return self.tree.size_report()

    def section_bytes(self) -> bytes:
        """Body of the RMQ1 section (the tree itself goes in STRE)."""
        return struct.pack("<Q", self.n)

    @classmethod
    def from_sections(cls, tree: SuccinctTree, body: bytes) -> "RmqEncoding":
        if len(body) < 8:
            raise FormatError("truncated RMQ1 section")
        (n,) = struct.unpack_from("<Q", body, 0)
        if n != tree.n:
            raise FormatError("RMQ1 length does not match the tree section")
        return cls(tree)


def encode(a, mode: str = "plain", alpha=None, break_ties: bool = False,
           mini_cap=None, micro_cap=None, memo: TableMemo = None) -> RmqEncoding:
    """Encode array ``a``.  ``mode`` is "plain" or "entropy"."""
    a = ArrayInput.coerce(a, break_ties=break_ties)
    if a.n < 1:
        raise RangeError("cannot encode an empty array")
    t = build_cartesian(a)
    if mode == "plain":
        params = None
    elif mode == "entropy":
        params = alpha if alpha is not None else AlphaParams.default()
        if not isinstance(params, AlphaParams):
            params = AlphaParams(*params)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return RmqEncoding(SuccinctTree.build(t, params, mini_cap, micro_cap, memo=memo))


def query(e: RmqEncoding, i: int, j: int) -> int:
    return e.query(i, j)
