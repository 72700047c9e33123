import numpy as np
import pytest

from rmqenc import rmq
from rmqenc.errors import DuplicateValueError, RangeError
from rmqenc.succinct_tree import AlphaParams
from rmqenc.tree_model import naive_rmq, organ_pipe, random_permutation

A5 = [3, 1, 4, 2, 5]


def test_examples():
    e = rmq.encode(A5)
    assert e.query(1, 5) == 2
    assert e.query(3, 5) == 4
    assert all(e.query(i, i) == i for i in range(1, 6))
    assert rmq.query(e, 2, 4) == 2


def test_range_errors():
    e = rmq.encode(A5)
    for i, j in [(0, 1), (2, 1), (1, 6), (3, 2)]:
        with pytest.raises(RangeError):
            e.query(i, j)


def test_duplicates_follow_ingestion_policy():
    with pytest.raises(DuplicateValueError):
        rmq.encode([1, 1, 2])
    e = rmq.encode([2, 1, 1, 3], break_ties=True)
    assert e.query(1, 4) == 2


def test_order_isomorphic_arrays_encode_identically():
    a = rmq.encode(A5).tree.to_bytes()
    b = rmq.encode([30, 10, 40, 20, 50]).tree.to_bytes()
    assert a == b
    inc = [rmq.encode(list(range(k, k + 40))).tree.to_bytes() for k in (1, 100)]
    assert inc[0] == inc[1]
    sq = rmq.encode([x * x for x in range(40)]).tree.to_bytes()
    assert sq == inc[0]


@pytest.mark.parametrize("mode", ["plain", "entropy"])
def test_exhaustive_small(mode):
    arrays = [random_permutation(n, seed=n).tolist() for n in (1, 2, 3, 10, 57, 120)]
    arrays += [list(range(1, 80)), list(range(80, 0, -1)), organ_pipe(81)]
    for a in arrays:
        e = rmq.encode(a, mode=mode, mini_cap=12, micro_cap=4)
        n = len(a)
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                assert e.query(i, j) == naive_rmq(a, i, j)


def test_entropy_mode_with_custom_alpha():
    alpha = AlphaParams.parse("0.25,0.25,0.25,0.25")
    a = random_permutation(500, seed=1)
    e = rmq.encode(a, mode="entropy", alpha=alpha)
    assert e.mode == "entropy" and e.alpha == alpha
    vals = a.values
    rng = np.random.default_rng(0)
    for _ in range(2000):
        i, j = sorted(rng.integers(1, 501, size=2).tolist())
        assert e.query(i, j) == int(np.argmin(vals[i - 1:j])) + i


def test_unknown_mode():
    with pytest.raises(ValueError):
        rmq.encode(A5, mode="fancy")
