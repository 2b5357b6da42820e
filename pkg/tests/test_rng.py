from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zkowf.errors import BudgetError
from zkowf.rng import EnumeratingRng, SeededRng, derive_seed, enumerate_outcomes, exact_probability


def test_golden_stream():
    r = SeededRng(7)
    assert (r.bits(16), r.below(1000), r.child("a").bits(8)) == (63816, 534, 211)
    assert derive_seed(1, "trial", "yes", 0) == 10403460963563248978


@given(st.integers(0, 2**64 - 1), st.text(max_size=4))
def test_deterministic_and_child_independent_of_parent_position(seed, label):
    a, b = SeededRng(seed), SeededRng(seed)
    a.bits(37)
    assert a.child(label).bits(64) == b.child(label).bits(64)
    assert SeededRng(seed).bits(40) == SeededRng(seed).bits(40)


@given(st.integers(1, 1000), st.integers(0, 2**32))
def test_below_in_range(n, seed):
    r = SeededRng(seed)
    assert all(0 <= r.below(n) < n for _ in range(5))


def test_seed_validation():
    with pytest.raises(ValueError):
        SeededRng(-1)
    with pytest.raises(ValueError):
        SeededRng(1 << 64)


def test_enumeration_of_uneven_branches():
    def proc(r):
        if r.below(2) == 0:
            return 0
        return 1 + r.below(3)
    d = enumerate_outcomes(proc)
    assert d.prob(0) == Fraction(1, 2)
    assert d.prob(2) == Fraction(1, 6)


def test_exact_probability_of_sum():
    assert exact_probability(lambda r: int(r.bits(2) + r.bits(2) == 3)) == Fraction(4, 16)


def test_branch_budget():
    with pytest.raises(BudgetError):
        enumerate_outcomes(lambda r: r.below(100), budget=10)
    with pytest.raises(BudgetError):
        EnumeratingRng(max_branch=4).below(5)
