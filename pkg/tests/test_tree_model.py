import numpy as np
import pytest

from rmqenc.errors import DuplicateValueError, FormatError, RangeError
from rmqenc.tree_model import (ArrayInput, BinaryTreeModel, NaiveTreeOps, build_cartesian,
                               complete_tree, left_path, naive_rmq, naive_rt2q, naive_tree_ops,
                               organ_pipe, random_permutation, random_tree, read_array,
                               right_path, spine_nodes, spine_profile, write_array)

A5 = [3, 1, 4, 2, 5]


def test_cartesian_example():
    t = build_cartesian(A5)
    assert t.root == 2
    assert t.left[2] == 1 and t.right[2] == 4
    assert t.left[4] == 3 and t.right[4] == 5
    assert t.preorder == [2, 1, 4, 3, 5]
    t.validate()


def test_increasing_array_is_right_path():
    t = build_cartesian([1, 2, 3])
    assert t.root == 1 and t.right[1] == 2 and t.right[2] == 3
    assert t.left[1] == t.left[2] == t.left[3] == 0


def test_duplicates_rejected_unless_ties_broken():
    with pytest.raises(DuplicateValueError):
        ArrayInput([2, 1, 2])
    a = ArrayInput([2, 1, 2], break_ties=True)
    assert a.tolist() == [2, 1, 3]
    assert naive_rmq(a, 1, 3) == 2


def test_naive_oracles():
    assert naive_rmq(A5, 1, 5) == 2
    assert naive_rmq(A5, 3, 5) == 4
    assert naive_rmq(A5, 4, 4) == 4
    assert naive_rt2q(A5, 1, 5) == (2, 4)
    assert naive_rt2q(A5, 1, 2) == (2, 1)
    with pytest.raises(RangeError):
        naive_rt2q(A5, 3, 3)
    with pytest.raises(RangeError):
        naive_rmq(A5, 0, 2)


def test_spine_profile_example():
    sp = spine_profile(build_cartesian(A5))
    assert (sp.l[2], sp.r[2], sp.m[2]) == (1, 2, 2)
    assert (sp.L_root, sp.R_root) == (2, 3)
    assert (sp.l[1], sp.r[1], sp.m[1]) == (0, 0, 0)
    assert (sp.l[4], sp.r[4], sp.m[4]) == (1, 1, 1)
    assert (sp.rdepth[4], sp.ldepth[4]) == (1, 0)
    assert sp.ldepth[2] == sp.rdepth[2] == 0
    assert spine_nodes(build_cartesian(A5), 2, "rispine") == [4, 3]


def test_spine_sum_identities_on_random_trees():
    for s in range(60):
        t = random_tree(1 + s * 7, seed=s)
        sp = spine_profile(t)
        n = t.m
        assert sum(sp.l[1:]) + sum(sp.r[1:]) == 2 * n - sp.L_root - sp.R_root
        assert sum(sp.m[1:]) == n - sp.L_root - sp.R_root + t.leaf_count


def test_second_minimum_lies_on_inner_spines():
    for s in range(5):
        a = random_permutation(40, seed=s)
        t = build_cartesian(a)
        for i in range(1, 41):
            for j in range(i + 1, 41):
                u, w = naive_rt2q(a, i, j)
                assert w in spine_nodes(t, u, "lispine") + spine_nodes(t, u, "rispine")


def test_left_child_iff_left_neighbour_larger():
    for s in range(10):
        a = random_permutation(500, seed=s)
        t = build_cartesian(a)
        v = a.values
        for k in range(2, 501):
            assert bool(t.left[k]) == bool(v[k - 1] < v[k - 2])


def test_random_permutation_is_seeded():
    a = random_permutation(100, seed=42).tolist()
    assert a == random_permutation(100, seed=42).tolist()
    assert a != random_permutation(100, seed=43).tolist()
    assert a != random_permutation(100, seed=42, stream=1).tolist()
    assert sorted(a) == list(range(1, 101))


def test_shapes():
    assert left_path(4).preorder == [4, 3, 2, 1]
    assert right_path(4).preorder == [1, 2, 3, 4]
    c = complete_tree(7)
    c.validate()
    assert c.root == 4 and max(c.depth[1:]) == 2
    assert organ_pipe(6) == [1, 3, 5, 6, 4, 2]
    build_cartesian(organ_pipe(9)).validate()


def test_naive_ops_on_example():
    t = build_cartesian(A5)
    ops = NaiveTreeOps(t)
    assert ops.lca(3, 5) == 4
    assert ops.depth(5) == 2 and ops.rdepth(5) == 2 and ops.ldepth(5) == 0
    assert ops.subtree_size(4) == 3
    assert ops.preorder_rank(4) == 3 and ops.preorder_select(4) == 3
    assert ops.leaf_rank(5) == 3
    assert naive_tree_ops(t, "parent", 3) == 4
    assert naive_tree_ops(t, "parent", 2) is None
    with pytest.raises(RangeError):
        ops.depth(6)
    with pytest.raises(ValueError):
        naive_tree_ops(t, "nope")


def test_from_links_and_validation():
    t = BinaryTreeModel.from_links({2: 1}, {2: 3}, 2)
    t.validate()
    assert t.inorder_sequence() == [1, 2, 3]
    assert t.shape_key() == build_cartesian([2, 1, 3]).shape_key()


@pytest.mark.parametrize("binary", [False, True])
def test_array_file_round_trip(tmp_path, binary):
    p = tmp_path / "a.dat"
    data = [5, -3, 9, 0]
    write_array(p, data, binary=binary)
    assert read_array(p) == data


def test_array_file_parse_error(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1\nx\n")
    with pytest.raises(FormatError):
        read_array(p)
