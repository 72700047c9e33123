"""Shared reference checks used by several test modules."""

from rmqenc.tree_model import NaiveTreeOps


def lca_row(t, u):
    """lca(u, v) for every v, by marking u's ancestors and pushing the
    nearest marked ancestor down the tree."""
    marked = [False] * (t.m + 1)
    x = u
    while x:
        marked[x] = True
        x = t.parent[x]
    near = [0] * (t.m + 1)
    for v in t.preorder:
        near[v] = v if marked[v] else near[t.parent[v]]
    return near


def tree_op_mismatches(t, st, all_pairs=True, limit=5):
    """Compare every succinct-tree operation with the naive walks.

    Returns a list of (operation, argument, expected, got) tuples.
    """
    naive = NaiveTreeOps(t)
    n = t.m
    bad = []

    def check(op, arg, exp, got):
        if exp != got and len(bad) < limit:
            bad.append((op, arg, exp, got))

    ids = [None] + [st.node_select_inorder(k) for k in range(1, n + 1)]
    if sorted(ids[1:]) != sorted(st.node_ids()):
        bad.append(("node_ids", None, "bijection", "differs"))
        return bad
    rank = {v: k for k, v in enumerate(ids) if v is not None}

    def as_inorder(x):
        return None if x is None else rank[x]

    for k in range(1, n + 1):
        v = ids[k]
        check("node_rank_inorder", k, k, st.node_rank_inorder(v))
        check("parent", k, naive.parent(k), as_inorder(st.parent(v)))
        check("left_child", k, naive.left_child(k), as_inorder(st.left_child(v)))
        check("right_child", k, naive.right_child(k), as_inorder(st.right_child(v)))
        check("is_leaf", k, naive.is_leaf(k), st.is_leaf(v))
        check("depth", k, naive.depth(k), st.depth(v))
        check("ldepth", k, naive.ldepth(k), st.ldepth(v))
        check("rdepth", k, naive.rdepth(k), st.rdepth(v))
        check("subtree_size", k, naive.subtree_size(k), st.subtree_size(v))
        check("leaf_rank", k, naive.leaf_rank(k), st.leaf_rank(v))
        pr = naive.preorder_rank(k)
        check("node_rank_preorder", k, pr, st.node_rank_preorder(v))
        check("node_select_preorder", pr, k, as_inorder(st.node_select_preorder(pr)))
    if all_pairs:
        for u in range(1, n + 1):
            row = lca_row(t, u)
            xu = ids[u]
            for v in range(u, n + 1):
                check("lca", (u, v), row[v], rank[st.lca(xu, ids[v])])
    return bad
