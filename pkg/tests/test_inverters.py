from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkowf.candidates import CandidateFunction, nizk_candidate, rv_candidate
from zkowf.dist import encode, stat_distance
from zkowf.errors import DomainError, GridError
from zkowf.inverters import (canonical_inverter, conditional_inverter, distributional_inverter, measure_deviation,
                             noisy_inverter)
from zkowf.rng import SeededRng, enumerate_outcomes
from zkowf.zoo import DialProfile, make_dial_nizk

from conftest import YES


def small_functions():
    return st.tuples(st.lists(st.integers(1, 4), min_size=1, max_size=3), st.integers(1, 5),
                     st.integers(0, 1000)).map(
        lambda t: CandidateFunction("h", t[0], lambda u, t=t: hash((u, t[2])) % t[1]))


@settings(max_examples=60, deadline=None)
@given(small_functions())
def test_distributional_deviation_is_zero(f):
    rep = measure_deviation(f, distributional_inverter(f))
    assert rep.distributional_deviation == 0 and rep.success_rate == 1


@settings(max_examples=40, deadline=None)
@given(small_functions())
def test_canonical_always_inverts(f):
    rep = measure_deviation(f, canonical_inverter(f))
    assert rep.success_rate == 1


def test_canonical_deviation_brute_force():
    # f(u) = u // 2 on range(4): the canonical answer misses half of each pair.
    f = CandidateFunction("half", (4,), lambda u: u[0] // 2)
    assert measure_deviation(f, canonical_inverter(f)).distributional_deviation == Fraction(1, 2)


@settings(max_examples=20, deadline=None)
@given(small_functions(), st.integers(0, 7), st.integers(0, 7))
def test_noisy_monotone(f, a, b):
    base = canonical_inverter(f)
    lo, hi = sorted((Fraction(a, 8), Fraction(b, 8)))
    d_lo = measure_deviation(f, noisy_inverter(base, lo)).distributional_deviation
    d_hi = measure_deviation(f, noisy_inverter(distributional_inverter(f), hi)).distributional_deviation
    assert d_hi <= hi
    s_lo = measure_deviation(f, noisy_inverter(base, lo)).success_rate
    s_hi = measure_deviation(f, noisy_inverter(base, hi)).success_rate
    assert s_hi <= s_lo and d_lo <= 1


def test_noisy_requires_dyadic():
    f = CandidateFunction("id", (2,), lambda u: u)
    with pytest.raises(GridError):
        noisy_inverter(canonical_inverter(f), Fraction(1, 3))


def test_answer_is_deterministic_in_rd():
    f = CandidateFunction("par", (8,), lambda u: u[0] % 2)
    inv = distributional_inverter(f)
    assert inv.rd_range == 4
    answers = {inv.answer(1, rd) for rd in range(inv.rd_range)}
    assert answers == {(1,), (3,), (5,), (7,)}


def _rv():
    spec = make_dial_nizk(DialProfile(0, 0, Fraction(1, 2), m=3, ell_z=1), Fraction(1, 4), 2)
    return rv_candidate(spec, YES, 3)


def test_factored_matches_table():
    spec = make_dial_nizk(DialProfile(0, 0, Fraction(1, 2), m=2, ell_z=1), Fraction(1, 4), 2)
    f = rv_candidate(spec, YES, 2)
    table = distributional_inverter(f, method="table")
    fact = distributional_inverter(f, method="factored")
    for y in [f((2, 1, 0, 3)), f((3, 0, 0, 0)), f((1, 1, 3, 3))]:
        a = enumerate_outcomes(lambda r: table.sample(y, r))
        b = enumerate_outcomes(lambda r: fact.sample(y, r), budget=1 << 20)
        assert stat_distance(a, b) == 0
    assert measure_deviation(f, fact, budget=1 << 20).distributional_deviation == 0


def test_factored_needs_layout():
    f = CandidateFunction("id", (2,), lambda u: u)
    with pytest.raises(DomainError):
        distributional_inverter(f, method="factored")


def test_conditional_uniform_on_success():
    f = _rv()
    inv = conditional_inverter(f, retry_cap=64)
    y = f((2, 1, 0, 1, 3))
    pre = f.preimages()[encode(y)][1]
    counts = {}
    r = SeededRng(11)
    n = 4000
    for _ in range(n):
        u = inv.sample(y, r)
        assert inv.inverts(y, u)
        counts[u] = counts.get(u, 0) + 1
    assert set(counts) == set(pre)
    expected = n / len(pre)
    assert max(abs(c - expected) for c in counts.values()) < 5 * expected ** 0.5


def test_conditional_off_image():
    f = _rv()
    inv = conditional_inverter(f, retry_cap=4)
    assert inv.sample((f((0, 0, 0, 0, 0))[0], Fraction(1, 7)), SeededRng(0)) is None


def test_monte_carlo_report(dial_nizk):
    f = nizk_candidate(dial_nizk, YES)
    rep = measure_deviation(f, canonical_inverter(f), "mc", trials=200, rng=SeededRng(1))
    assert rep.success_rate == 1.0 and rep.deviation_kind == "lower-bound"
    rep = measure_deviation(f, distributional_inverter(f), "mc", trials=200, rng=SeededRng(1))
    assert rep.deviation_kind == "estimate" and rep.to_dict()["samples"] == 200


def test_inverter_target_check(dial_nizk):
    f = nizk_candidate(dial_nizk, YES)
    g = nizk_candidate(dial_nizk, YES)
    with pytest.raises(DomainError):
        measure_deviation(g, canonical_inverter(f))
