import math
from fractions import Fraction

import pytest

from rmqenc import rt2q
from rmqenc.errors import DomainError, RangeError
from rmqenc.succinct_tree import type_counts
from rmqenc.tree_model import (build_cartesian, naive_rt2q, organ_pipe, random_permutation,
                               spine_profile)

A5 = [3, 1, 4, 2, 5]


def test_merge_vector_example():
    t = build_cartesian(A5)
    vals = A5
    assert rt2q.merge_bits(t, vals, 2) == [1, 0]
    assert rt2q.merge_bits(t, vals, 4) == [1]
    assert rt2q.merge_bits(t, vals, 1) == []
    assert rt2q.build_merge_vector(t, A5).to_string() == "101"


def test_merge_offsets_example():
    e = rt2q.encode(A5)
    assert [e.merge_offset(u) for u in range(1, 6)] == [0, 0, 2, 2, 3]
    assert rt2q.merge_offset(e, 1) == 0


def test_query_examples():
    e = rt2q.encode(A5)
    assert e.query(1, 5) == (2, 4)
    assert e.query(1, 2) == (2, 1)
    assert e.query(2, 5) == (2, 4)
    assert e.query(3, 5) == (4, 3)
    with pytest.raises(RangeError):
        e.query(3, 3)
    with pytest.raises(RangeError):
        e.query(0, 2)


def test_exhaustive_small():
    arrays = [random_permutation(n, seed=n).tolist() for n in (2, 3, 4, 11, 64, 130)]
    arrays += [list(range(1, 70)), list(range(70, 0, -1)), organ_pipe(71)]
    for a in arrays:
        e = rt2q.encode(a, mini_cap=10, micro_cap=4)
        n = len(a)
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                assert e.query(i, j) == naive_rt2q(a, i, j)


def test_segment_counts():
    a = random_permutation(400, seed=5)
    t = build_cartesian(a)
    sp = spine_profile(t)
    vals = a.tolist()
    for u in range(1, 401):
        bits = rt2q.merge_bits(t, vals, u)
        assert len(bits) == sp.m[u]
        if sp.m[u]:
            zero_def = sp.l[u] - bits.count(0)
            one_def = sp.r[u] - bits.count(1)
            assert sorted((zero_def, one_def)) == [0, 1]


def test_h_of_x_values():
    assert rt2q.h_of_x(rt2q.X_STAR) == pytest.approx(rt2q.GAMMA, abs=1e-4)
    assert rt2q.GAMMA == pytest.approx(3.27155, abs=1e-4)
    assert rt2q.h_of_x(Fraction(1, 3)) == pytest.approx(math.log2(3) + 5 / 3, abs=1e-12)
    x, h = rt2q.h_argmax(1e-5)
    assert x == pytest.approx(0.29289, abs=1e-4)
    for bad in (0, 0.5, -1, 0.7):
        with pytest.raises(DomainError):
            rt2q.h_of_x(bad)


def test_capped_alpha_on_perfect_tree():
    # leaves are just over half the nodes, so the cap applies
    a = [0] * 15
    order = [8, 4, 12, 2, 6, 10, 14, 1, 3, 5, 7, 9, 11, 13, 15]
    for rank, pos in enumerate(order, 1):
        a[pos - 1] = rank
    t = build_cartesian(a)
    assert t.leaf_count == 8
    alpha = rt2q.capped_alpha(t)
    assert alpha.as_tuple() == (Fraction(9, 20), Fraction(1, 20), Fraction(1, 20), Fraction(9, 20))


def test_measure_closed_form_and_bounds():
    for s in range(40):
        n = 2 + 53 * s
        a = random_permutation(n, seed=s)
        e = rt2q.encode(a)
        t = build_cartesian(a)
        counts = type_counts(t)
        alpha = rt2q.capped_alpha(t)
        assert all(Fraction(1, 20) <= p <= Fraction(9, 20) for p in alpha.as_tuple())
        assert e.analytic_measure() == pytest.approx(
            alpha.measure(counts) + n + counts[0], rel=1e-12)
        x = t.leaf_count / n
        xc = min(max(x, 0.05), 0.45)
        # nH(x) misses the analytic measure by lg(2x / (1 - 2x)) when no cap applies
        assert e.analytic_measure() <= rt2q.h_of_x(xc) * n + math.log2(9) + 1e-9 * n
        if 0.05 < x < 0.45:
            exact = n * rt2q.h_of_x(x) + math.log2(2 * x / (1 - 2 * x))
            assert e.analytic_measure() == pytest.approx(exact, rel=1e-9)


def test_size_report_includes_merge_bits():
    e = rt2q.encode(random_permutation(1000, seed=1))
    rep = e.size_report()
    assert rep["merge_payload_bits"] == len(e.merge)
    assert rep["total_bits"] > rep["payload_bits"] + rep["merge_payload_bits"]


def test_needs_two_elements():
    with pytest.raises(RangeError):
        rt2q.encode([1])
