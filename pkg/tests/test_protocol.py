from fractions import Fraction

import pytest

from zkowf.dist import BitString
from zkowf.errors import RelationError, ScheduleError
from zkowf.protocol import (FunctionStrategy, HonestStrategy, best_prover_value, completeness_error,
                            measure_error_profile, run_protocol, sim_distribution, sim_project,
                            view_distribution)
from zkowf.rng import SeededRng, exact_probability
from zkowf.zoo import DialProfile, make_dial_nizk, make_dial_pc

from conftest import NO, YES


def test_dial_nizk_profile(dial_nizk):
    prof = measure_error_profile(dial_nizk, YES, YES, NO)
    assert prof.as_tuple() == (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4))


def test_completeness_matches_enumerated_runs(dial_nizk):
    # Independent path: enumerate run_protocol itself instead of the view table.
    acc = exact_probability(lambda r: int(run_protocol(dial_nizk, YES, HonestStrategy(dial_nizk, YES, YES), r).accept))
    assert acc == 1 - completeness_error(dial_nizk, YES, YES)


def test_sim_projection(dial_nizk):
    assert sim_project(dial_nizk, YES, (3, 0), 1) == (BitString(3, 10),)
    with pytest.raises(ScheduleError):
        sim_project(dial_nizk, YES, (3, 0), 3)


def test_view_needs_witness(dial_nizk):
    with pytest.raises(RelationError):
        view_distribution(dial_nizk, YES, NO)


def test_no_instance_rejected_by_profile(dial_nizk):
    with pytest.raises(RelationError):
        measure_error_profile(dial_nizk, YES, YES, YES)


def test_abort_rejects(dial_nizk):
    run = run_protocol(dial_nizk, YES, FunctionStrategy(lambda prefix, rng: None), SeededRng(0))
    assert run.accept is False and run.transcript[-1] is None


def test_out_of_range_message(dial_nizk):
    with pytest.raises(ScheduleError):
        run_protocol(dial_nizk, YES, FunctionStrategy(lambda prefix, rng: 1 << 10), SeededRng(0))


def test_prefix_schedule(dial_nizk):
    dial_nizk.check_prefix((BitString(0, 10), 3))
    with pytest.raises(ScheduleError):
        dial_nizk.check_prefix((BitString(0, 9),))


def test_dial_pc_profile_and_message_count():
    spec = make_dial_pc(DialProfile(Fraction(0), Fraction(1, 8), Fraction(1, 8), m=4, ell_z=3), 2, (2, 2))
    assert spec.t == 4
    assert measure_error_profile(spec, YES, YES, NO).as_tuple() == (0, Fraction(1, 8), Fraction(1, 8))


def test_gi_profile(gi_yes, gi_no):
    spec, x = gi_yes
    w = (0, 1, 2, 3)
    from zkowf.zoo import find_isomorphism
    w = find_isomorphism(*x)
    prof = measure_error_profile(spec, x, w, gi_no[1])
    assert prof.as_tuple() == (0, Fraction(1, 2), 0)
    assert spec.t == 3
    assert sim_distribution(spec, x) == view_distribution(spec, x, w)


def test_randomized_verifier_acceptance():
    spec = make_dial_nizk(DialProfile(0, 0, 0, m=4, ell_z=1), verifier_noise=Fraction(1, 4), verifier_coin_bits=2)
    r = BitString(5, 4)
    assert spec.acceptance(YES, (r, spec.prover(YES, YES, (), (r,)))) == Fraction(3, 4)
    assert completeness_error(spec, YES, YES) == Fraction(1, 4)


def test_best_prover_falls_back_to_analytic_bound(gi_no):
    spec, x = gi_no
    assert best_prover_value(spec, x, budget=10) == Fraction(1, 2)
