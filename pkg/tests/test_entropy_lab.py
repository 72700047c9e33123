import json
import math

import pytest

from rmqenc import entropy_lab as el
from rmqenc.errors import RangeError, ResourceError
from rmqenc.tree_model import build_cartesian, left_path, random_permutation, right_path


def test_single_node_entropy_is_two_bits():
    assert el.ultra_succinct_entropy(left_path(1)) == pytest.approx(2.0)


def test_left_path_hand_formula():
    # every ordinal node has arity 1 except the deepest one (arity 0);
    # the dummy root adopts the single-node right spine, so has arity 1
    n = 9
    ones, zeros = n, 1
    expect = ones * math.log2((n + 1) / ones) + zeros * math.log2((n + 1) / zeros)
    assert el.ultra_succinct_entropy(left_path(n)) == pytest.approx(expect)
    # the right path hangs entirely under the dummy root
    expect_r = 1 * math.log2(n + 1) + n * math.log2((n + 1) / n)
    assert el.ultra_succinct_entropy(right_path(n)) == pytest.approx(expect_r)


def test_stack_arities_match_tree_arities():
    for s in range(10):
        a = random_permutation(250, seed=s)
        t = build_cartesian(a)
        assert el.arities_from_values(a.values) == el.ordinal_arities(t)
        assert el.ultra_entropy_per_node(a.values) == pytest.approx(
            el.ultra_succinct_entropy(t) / 251)


def test_ultra_entropy_experiment_is_reproducible():
    r1 = el.ultra_entropy_experiment(1000, 20, seed=7)
    r2 = el.ultra_entropy_experiment(1000, 20, seed=7, threads=3)
    assert r1.values == r2.values
    assert r1.mean == pytest.approx(sum(r1.values) / 20)
    assert abs(r1.mean - 1.9919) < 0.004


def test_avg_case_measure_and_neighbour_rule():
    rep = el.avg_case_measure(20000, 6, seed=1, check_every=1)
    assert abs(rep.mean - (1 / 3 + math.log2(3))) < 0.02
    assert abs(rep.extra["left_child_frequency"] - 0.5) < 0.02
    assert abs(rep.extra["leaf_fraction"] - 1 / 3) < 0.02
    with pytest.raises(RangeError):
        el.avg_case_measure(1, 3)


def test_report_serialisation():
    rep = el.ultra_entropy_experiment(200, 4, seed=0)
    d = json.loads(rep.to_json())
    assert d["n"] == 200 and d["trials"] == 4 and len(d["values"]) == 4
    text = rep.to_text()
    assert "mean" in text and f"{rep.mean:.6f}" in text


def test_extended_tree_counts():
    assert [el.count_extended_trees(n) for n in (1, 2, 3)] == [1, 2, 6]
    for n in range(1, 10):
        assert el.count_extended_trees(n) == el.count_extended_trees_brute(n)
    with pytest.raises(ResourceError):
        el.count_extended_trees(15)


def test_catalan():
    assert [el.catalan(n) for n in range(8)] == [1, 1, 2, 5, 14, 42, 132, 429]


def test_census_small():
    assert el.class_census(5, "rmq").classes == 42
    c = el.class_census(3, "rt2q")
    assert c.classes == 6 == c.extended_trees
    for n in range(2, 7):
        assert el.class_census(n, "r2m").classes == el.class_census(n, "rt2q").classes
        assert el.class_census(n, "rmq").classes == el.catalan(n)
    assert el.class_census(1, "rmq").classes == 1


def test_census_caps():
    with pytest.raises(ResourceError):
        el.class_census(9, "rt2q")
    with pytest.raises(ResourceError):
        el.class_census(11, "rmq")
    with pytest.raises(RangeError):
        el.class_census(1, "r2m")
    with pytest.raises(ValueError):
        el.class_census(4, "rt3q")


def test_fit_log_model_recovers_constant():
    ns = [100, 1000, 10000]
    totals = [2 * n - 0.81 * math.log2(n) for n in ns]
    assert el.fit_log_model(ns, totals)["c"] == pytest.approx(0.81)
