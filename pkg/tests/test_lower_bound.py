import math

import pytest

from rmqenc import lower_bound as lb
from rmqenc.entropy_lab import count_extended_trees
from rmqenc.errors import DomainError, ResourceError

LEVEL2 = {(1, 0): 1, (2, 0): 2, (2, 1): 4, (2, 2): 4, (3, 0): 2, (3, 1): 10,
          (3, 2): 26, (3, 3): 36, (3, 4): 24}


def test_level_one_polynomial():
    p = lb.generate_polynomial(1)
    assert p.coeffs == {(1, 0): 1, (1, 1): 2, (1, 2): 2}
    assert p.to_string() == "x + 2xT + 2xT^2"


def test_level_two_polynomial_matches_caption():
    p = lb.generate_polynomial(2)
    assert p.coeffs == LEVEL2
    assert p.terms == 9 and p.degree == 4


@pytest.mark.parametrize("level", [1, 2, 3])
def test_dp_equals_brute_force(level):
    assert lb.generate_polynomial(level) == lb.brute_force_polynomial(level)
    assert len(lb.expansions(level)) == lb.case_count(level)


def test_case_counts():
    assert [lb.case_count(k) for k in range(5)] == [1, 4, 25, 676, 458329]


def test_degrees_double_per_level():
    for level in range(1, 6):
        p = lb.generate_polynomial(level)
        assert p.degree == 2 ** level
        assert p.x_degree <= 2 ** level - 1 and p.t_degree <= 2 ** level
        assert all(c > 0 for c in p.coeffs.values())


def test_level_one_singularity_closed_form():
    s = lb.find_singularity(lb.generate_polynomial(1))
    assert s.r == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-12)
    assert s.coefficient == pytest.approx(math.log2(2 / (math.sqrt(2) - 1)), abs=1e-12)
    assert s.diagnostics["residual_G"] <= 1e-10 and s.diagnostics["residual_GT"] <= 1e-10


def test_singularity_decreases_and_solves_the_system():
    prev = 1.0
    for level in range(1, 6):
        p = lb.generate_polynomial(level)
        s = lb.find_singularity(p)
        assert 0 < s.r < prev
        prev = s.r
        assert abs(p.evaluate(s.r, s.T_at_r) - s.T_at_r) < 1e-9
        assert s.diagnostics["residual_G"] <= 1e-10
        assert s.diagnostics["residual_GT"] <= 1e-10
        assert s.diagnostics["roots"]


def test_series_undercounts_extended_trees():
    exact = [count_extended_trees(n) for n in range(1, 7)]
    for level in range(1, 5):
        series = lb.generate_polynomial(level).series(6)
        assert all(a <= b for a, b in zip(series, exact))
        assert series[0] == 1
    # level 4 already sees every spine of a 6-node tree
    assert lb.generate_polynomial(4).series(6) == exact


def test_gates_and_domain():
    with pytest.raises(ResourceError):
        lb.generate_polynomial(6)
    with pytest.raises(ResourceError):
        lb.generate_polynomial(8, allow_large=True)
    with pytest.raises(DomainError):
        lb.generate_polynomial(0)
    with pytest.raises(ResourceError):
        lb.expansions(5)
    assert lb.memory_estimate(6) > lb.memory_estimate(5)


def test_report_rows_and_table():
    rows = lb.lower_bound_report([1, 2], brute_check=True)
    assert [r["terms"] for r in rows] == [3, 9]
    assert all(r["brute_force_match"] for r in rows)
    text = lb.format_table(rows)
    assert "0.207107" in text and "0.190879" in text
    with pytest.raises(ResourceError):
        lb.lower_bound_report([4], brute_check=True)
