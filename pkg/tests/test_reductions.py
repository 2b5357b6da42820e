from fractions import Fraction

import pytest

from zkowf.candidates import OracleStack, ReductionParams, cr_candidate, lift_candidate, nizk_candidate, pc_candidate, rv_candidate
from zkowf.errors import DomainError
from zkowf.inverters import Inverter, canonical_inverter, conditional_inverter, distributional_inverter, noisy_inverter
from zkowf.reductions import (B_value, cr_B, cr_reduce, cr_run, lift_inverter, nizk_reduce, one_sided_decider, pc_reduce,
                              pc_run, restrict_inverter, rv_reduce)
from zkowf.rng import SeededRng, exact_probability
from zkowf.zoo import DialProfile, make_dial_nizk

from conftest import NO, YES

SMALL = DialProfile(Fraction(1, 4), Fraction(1, 4), Fraction(1, 2), m=2, ell_z=1)


def _reachable_acceptance(spec, x):
    """Fraction of CRS values r for which some simulator coin gives an accepting pair."""
    good = {tr[0] for tr in (spec.simulator(x, rho) for rho in spec.sim_inputs()) if spec.accepts(x, tr)}
    return Fraction(len(good), 1 << spec.m)


class TestNizk:
    @pytest.mark.parametrize("x", [YES, NO])
    def test_canonical_exact_matches_brute_force(self, dial_nizk, x):
        f = nizk_candidate(dial_nizk, x)
        inv = canonical_inverter(f)
        acc = exact_probability(lambda r: nizk_reduce(dial_nizk, x, inv, r))
        assert acc == _reachable_acceptance(dial_nizk, x)

    def test_frozen_values(self, dial_nizk):
        yes = nizk_candidate(dial_nizk, YES)
        no = nizk_candidate(dial_nizk, NO)
        assert exact_probability(lambda r: nizk_reduce(dial_nizk, YES, canonical_inverter(yes), r)) == Fraction(15, 16)
        assert exact_probability(lambda r: nizk_reduce(dial_nizk, NO, canonical_inverter(no), r)) == Fraction(1, 8)

    def test_noise_lowers_acceptance(self):
        spec = make_dial_nizk(SMALL)
        f = nizk_candidate(spec, YES)
        clean = exact_probability(lambda r: nizk_reduce(spec, YES, canonical_inverter(f), r))
        noisy = noisy_inverter(canonical_inverter(f), Fraction(1, 2))
        assert exact_probability(lambda r: nizk_reduce(spec, YES, noisy, r)) < clean == Fraction(3, 4)


class TestPublicCoin:
    def test_gi_exact(self, gi_yes, gi_no):
        for (spec, x), expected in ((gi_yes, 1), (gi_no, Fraction(1, 2))):
            inv = distributional_inverter(pc_candidate(spec, x))
            assert exact_probability(lambda r: pc_reduce(spec, x, inv, r)) == expected

    def test_fallback_counted(self, gi_no):
        spec, x = gi_no
        inv = distributional_inverter(pc_candidate(spec, x))
        fallbacks = sum(pc_run(spec, x, inv, SeededRng(s))[1] for s in range(40))
        assert fallbacks > 0


class TestConstantRound:
    @pytest.fixture
    def stack(self, gi_yes):
        spec, x = gi_yes
        params = ReductionParams(4, 4, Fraction(1, 4))
        a2 = distributional_inverter(cr_candidate(spec, x, 2))
        f1 = cr_candidate(spec, x, 1, OracleStack([a2]), params)
        a1 = conditional_inverter(f1, retry_cap=256)
        return spec, x, params, OracleStack([a1, a2])

    def test_yes_instance_accepts(self, stack):
        spec, x, params, oracles = stack
        assert all(cr_reduce(spec, x, oracles, params, SeededRng(s)) for s in range(20))

    def test_b_trace(self, stack):
        spec, x, params, oracles = stack
        from zkowf.dist import BitString
        res = cr_B(spec, x, 1, (BitString.empty(),), oracles, params, SeededRng(3))
        assert res.value == 1 and res.message is not None
        assert res.trace[0].a == 4 and res.trace[0].grid == 4

    def test_run_records_b_results(self, stack):
        spec, x, params, oracles = stack
        run, results = cr_run(spec, x, oracles, params, SeededRng(2))
        assert run.accept and len(results) == 2

    def test_b_value_monte_carlo(self, stack):
        spec, x, params, oracles = stack
        b = B_value(spec, x, oracles, params, "monte-carlo", 20, SeededRng(1))
        assert b.value == 1.0 and b.samples == 20


class TestRandomizedVerifier:
    def test_acceptance_near_honest(self):
        spec = make_dial_nizk(DialProfile(0, Fraction(1, 8), 0, m=4, ell_z=1), Fraction(1, 4), 2)
        params = ReductionParams(8, 16, Fraction(1, 8))
        yes = distributional_inverter(rv_candidate(spec, YES, params.q))
        no = distributional_inverter(rv_candidate(spec, NO, params.q))
        n = 200
        yes_acc = sum(rv_reduce(spec, YES, yes, params, SeededRng(s)) for s in range(n)) / n
        no_acc = sum(rv_reduce(spec, NO, no, params, SeededRng(s)) for s in range(n)) / n
        assert yes_acc > 0.6 and no_acc < 0.3

    def test_needs_randomized_verifier(self, dial_nizk):
        with pytest.raises(DomainError):
            rv_reduce(dial_nizk, YES, None, ReductionParams(4, 4, Fraction(1, 4)), SeededRng(0))


class TestDecider:
    def _family(self, spec):
        lifted = lift_candidate([(YES, nizk_candidate(spec, YES)), (NO, nizk_candidate(spec, NO))])
        return lifted, distributional_inverter(lifted)

    def test_restrict_and_lift_agree(self, dial_nizk):
        lifted, inv = self._family(dial_nizk)
        a = restrict_inverter(inv, YES)
        y = a.target((100, 9))
        assert a.inverts(y, a.sample(y, SeededRng(0)))
        per = {YES: distributional_inverter(nizk_candidate(dial_nizk, YES)),
               NO: distributional_inverter(nizk_candidate(dial_nizk, NO))}
        combined = lift_inverter(lifted, per)
        y = (NO, per[NO].target((1, 1)))
        assert combined.inverts(y, combined.sample(y, SeededRng(0)))

    def test_one_sided(self):
        spec = make_dial_nizk(SMALL)
        lifted, inv = self._family(spec)

        def reduce_fn(x, restricted, rng):
            return nizk_reduce(spec, x, restricted[0], rng)

        # The distributional inverter never fails, so the decider is the reduction.
        yes = exact_probability(lambda r: one_sided_decider(lifted, reduce_fn, inv, YES, r))
        no = exact_probability(lambda r: one_sided_decider(lifted, reduce_fn, inv, NO, r))
        assert yes == Fraction(3, 4) and no == Fraction(1, 4)

    def test_failed_inversion_accepts(self):
        spec = make_dial_nizk(SMALL)
        lifted, _ = self._family(spec)
        f_yes = nizk_candidate(spec, YES)
        never = lift_inverter(lifted, {YES: Inverter(f_yes, "null", 1, lambda y, rd: None),
                                       NO: canonical_inverter(nizk_candidate(spec, NO))})
        out = one_sided_decider(lifted, lambda *a: 0, never, YES, SeededRng(4), with_branch=True)
        assert out == (1, "inversion-failed")

    def test_outside_family(self, dial_nizk):
        lifted, inv = self._family(dial_nizk)
        from zkowf.dist import BitString
        with pytest.raises(DomainError):
            one_sided_decider(lifted, lambda *a: 1, inv, BitString.from_str("1111"), SeededRng(0))
