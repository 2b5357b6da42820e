"""Reductions that turn inverters for the candidates into provers and deciders.

All procedures take an rng with the SeededRng interface. Passing an
EnumeratingRng instead (through ``enumerate_outcomes``) yields exact
acceptance probabilities whenever every draw has an enumerable range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from .candidates import CandidateFunction, OracleStack, ReductionParams
from .dist import BitString, Estimate, empirical_mean, encode
from .errors import DepthError, DomainError, InvariantViolation, ScheduleError
from .inverters import Inverter
from .protocol import ProtocolRun, ProverStrategy, PublicCoinSpec, run_protocol
from .rng import DEFAULT_BUDGET, SeededRng, enumerate_outcomes


def _assert_verifies(spec: PublicCoinSpec, x, transcript: tuple):
    if not spec.accepts(x, transcript):
        raise InvariantViolation(f"preimage check passed but transcript {transcript!r} is rejected")


def _draw_coin(spec: PublicCoinSpec, round_idx: int, rng) -> BitString:
    m = spec.coin_bits[round_idx]
    return BitString(rng.bits(m), m)


# One-round protocols.

def nizk_reduce(spec: PublicCoinSpec, x, inv: Inverter, rng) -> int:
    """r <- Gen; rho <- A(r, 1); accept iff f_x(rho) = (r, 1)."""
    if spec.randomized_verifier:
        raise DomainError("use rv_reduce for randomized verifiers")
    r = _draw_coin(spec, 0, rng)
    y = (r, 1)
    rho = inv.sample(y, rng)
    if not inv.inverts(y, rho):
        return 0
    _assert_verifies(spec, x, tuple(spec.simulator(x, inv.target.coins_of(rho))))
    return 1


# Public-coin protocols: the prover that inverts f_x(i, rho).

class PCProver(ProverStrategy):
    """Round i: rho <- A(r_1, pi_1, ..., r_i, 1), reply Sim_2i(x; rho).

    When the inverter fails the reply is Sim_2i(x; 0...0) and the fallback
    is counted, so trials that relied on it can be told apart.
    """

    def __init__(self, spec: PublicCoinSpec, x, inv: Inverter):
        self.spec, self.x, self.inv = spec, x, inv
        self.fallbacks = 0
        self.zero_coins = tuple(0 for _ in spec.sim_coins)

    def message(self, prefix: tuple, rng) -> int:
        spec = self.spec
        i = (len(prefix) + 1) // 2
        y = tuple(prefix) + (1,)
        u = self.inv.sample(y, rng)
        if self.inv.inverts(y, u):
            rho = self.inv.target.coins_of(u)
            tr = tuple(spec.simulator(self.x, rho))
            if i == spec.k:
                _assert_verifies(spec, self.x, tuple(prefix) + (tr[2 * i - 1],))
        else:
            self.fallbacks += 1
            tr = tuple(spec.simulator(self.x, self.zero_coins))
        return tr[2 * i - 1]

    def start(self, rng):
        return lambda prefix: self.message(prefix, rng)


def pc_prover_strategy(spec: PublicCoinSpec, x, inv: Inverter) -> PCProver:
    return PCProver(spec, x, inv)


def pc_run(spec: PublicCoinSpec, x, inv: Inverter, rng) -> tuple[ProtocolRun, int]:
    prover = PCProver(spec, x, inv)
    run = run_protocol(spec, x, prover, rng)
    return run, prover.fallbacks


def pc_reduce(spec: PublicCoinSpec, x, inv: Inverter, rng) -> int:
    """Run the protocol with the inverter-based prover; the verifier decides."""
    return int(pc_run(spec, x, inv, rng)[0].accept)


# Constant-round protocols: the estimate-search prover B_i.

@dataclass(frozen=True)
class TraceRecord:
    a: int
    grid: int
    inverted: bool
    est_hat: Fraction | None
    accepted: bool


@dataclass
class BResult:
    value: Fraction
    message: int | None
    trace: list[TraceRecord] = field(default_factory=list)


EstimateSearchTrace = list


def _bk(spec: PublicCoinSpec, x, prefix: tuple, oracles: OracleStack, rd: int) -> tuple[Fraction, int | None]:
    """B_k on randomness rd: one inversion attempt at flag 1."""
    key = (prefix, rd)
    hit = oracles.memo.get(key)
    if hit is not None:
        return hit
    A = oracles[0]
    y = tuple(prefix) + (1,)
    u = A.answer(y, rd)
    if A.inverts(y, u):
        k = spec.k
        pi = spec.simulator(x, A.target.coins_of(u))[2 * k - 1]
        _assert_verifies(spec, x, tuple(prefix) + (pi,))
        out = (Fraction(1), pi)
    else:
        out = (Fraction(0), None)
    oracles.memo[key] = out
    return out


def b_value_rd(spec: PublicCoinSpec, x, j: int, prefix: tuple, oracles: OracleStack,
               params: ReductionParams, rd: int) -> Fraction:
    """B_{j,1}(prefix) with its randomness fixed to rd."""
    if len(oracles) != spec.k - j + 1:
        raise DepthError(f"B_{j} needs {spec.k - j + 1} oracles, got {len(oracles)}")
    if j == spec.k:
        return _bk(spec, x, prefix, oracles, rd)[0]
    return cr_B(spec, x, j, prefix, oracles, params, SeededRng(rd)).value


def cr_Est(spec: PublicCoinSpec, x, i: int, prefix_with_pi: tuple, oracles: OracleStack,
           params: ReductionParams, rng) -> Estimate:
    """Mean of q draws of B_{i+1,1} on fresh next-round coins; oracles are A_{i+1..k}."""
    if len(prefix_with_pi) != 2 * i:
        raise ScheduleError(f"Est_{i} needs a prefix of {2 * i} messages")
    if not isinstance(oracles, OracleStack):
        oracles = OracleStack(oracles)
    k = spec.k
    rd_range = oracles.rd_range()

    def draw(r):
        sigma = _draw_coin(spec, i, r)
        return b_value_rd(spec, x, i + 1, tuple(prefix_with_pi) + (sigma,), oracles, params, r.below(rd_range))

    return empirical_mean(draw, params.q, rng, depth=k - i)


def cr_B_hat(spec: PublicCoinSpec, x, i: int, prefix: tuple, a: int, oracles: OracleStack,
             params: ReductionParams, rng) -> tuple[bool, int | None, Estimate | None]:
    """One iteration of the B_i loop at grid point a / q^(k-i).

    Returns (inverted, pi_i, est_hat); est_hat is None when inversion failed.
    """
    k = spec.k
    G = params.grid(k - i)
    A = oracles[0]
    y = tuple(prefix) + (Fraction(a, G),)
    u = A.sample(y, rng)
    if not A.inverts(y, u):
        return False, None, None
    pi = spec.simulator(x, A.target.coins_of(u))[2 * i - 1]
    est_hat = cr_Est(spec, x, i, tuple(prefix) + (pi,), oracles.drop(1), params, rng)
    return True, pi, est_hat


def cr_B(spec: PublicCoinSpec, x, i: int, prefix: tuple, oracles: OracleStack | Sequence,
         params: ReductionParams, rng) -> BResult:
    """B_i: search a = q^(k-i), ..., 1 for the largest estimate that checks out."""
    if not isinstance(oracles, OracleStack):
        oracles = OracleStack(oracles)
    k = spec.k
    if len(prefix) != 2 * i - 1:
        raise ScheduleError(f"B_{i} needs a prefix of {2 * i - 1} messages")
    if len(oracles) != k - i + 1:
        raise DepthError(f"B_{i} needs {k - i + 1} oracles, got {len(oracles)}")
    if i == k:
        value, pi = _bk(spec, x, tuple(prefix), oracles, rng.below(oracles[0].rd_range))
        return BResult(value, pi, [TraceRecord(1, 1, pi is not None, None, pi is not None)])
    G = params.grid(k - i)
    trace: list[TraceRecord] = []
    for a in range(G, 0, -1):
        inverted, pi, est_hat = cr_B_hat(spec, x, i, prefix, a, oracles, params, rng)
        if not inverted:
            trace.append(TraceRecord(a, G, False, None, False))
            continue
        ok = abs(est_hat.value - Fraction(a, G)) < params.tau
        trace.append(TraceRecord(a, G, True, est_hat.value, ok))
        if ok:
            return BResult(Fraction(a, G), pi, trace)
    return BResult(Fraction(0), None, trace)


class CRProver(ProverStrategy):
    def __init__(self, spec: PublicCoinSpec, x, oracles: OracleStack, params: ReductionParams):
        self.spec, self.x, self.oracles, self.params = spec, x, oracles, params
        self.results: list[BResult] = []

    def start(self, rng):
        def session(prefix):
            i = (len(prefix) + 1) // 2
            res = cr_B(self.spec, self.x, i, prefix, self.oracles.drop(i - 1), self.params, rng)
            self.results.append(res)
            return res.message
        return session


def cr_run(spec: PublicCoinSpec, x, oracles, params: ReductionParams, rng) -> tuple[ProtocolRun, list[BResult]]:
    if not isinstance(oracles, OracleStack):
        oracles = OracleStack(oracles)
    if len(oracles) != spec.k:
        raise DepthError(f"need {spec.k} oracles, got {len(oracles)}")
    prover = CRProver(spec, x, oracles, params)
    run = run_protocol(spec, x, prover, rng)
    return run, prover.results


def cr_reduce(spec: PublicCoinSpec, x, oracles, params: ReductionParams, rng) -> int:
    """Play B_{i,2} as the round-i prover; a None message is a rejection."""
    return int(cr_run(spec, x, oracles, params, rng)[0].accept)


@dataclass(frozen=True)
class BValue:
    value: Fraction | float
    method: str
    samples: int | None = None
    radius: float | None = None


def B_value(spec: PublicCoinSpec, x, oracles, params: ReductionParams, mode: str = "monte-carlo",
            trials: int = 1000, rng=None, budget: int = DEFAULT_BUDGET) -> BValue:
    """E over r_1 of the value output by B_1."""
    if not isinstance(oracles, OracleStack):
        oracles = OracleStack(oracles)

    def once(r):
        r1 = _draw_coin(spec, 0, r)
        return cr_B(spec, x, 1, (r1,), oracles, params, r).value

    if mode == "exact":
        dist = enumerate_outcomes(once, budget)
        return BValue(dist.expectation(), "exact")
    if rng is None:
        rng = SeededRng(0)
    vals = [float(once(rng.child("B", t))) for t in range(trials)]
    mean = sum(vals) / trials
    var = sum((v - mean) ** 2 for v in vals) / max(1, trials - 1)
    return BValue(mean, "monte-carlo", trials, 3 * math.sqrt(var / trials))


# Randomized verifier.

def rv_B(spec: PublicCoinSpec, x, r: BitString, inv: Inverter, params: ReductionParams, rng) -> BResult:
    """Search a = q, ..., 1 for an invertible (r, a/q) whose proof re-estimates to a/q."""
    f = inv.target
    q = f.layout.q
    v = spec.verifier_coin_bits
    trace: list[TraceRecord] = []
    for a in range(q, 0, -1):
        y = (r, Fraction(a, q))
        u = inv.sample(y, rng)
        if not inv.inverts(y, u):
            trace.append(TraceRecord(a, q, False, None, False))
            continue
        pi = spec.simulator(x, f.coins_of(u))[1]
        est_hat = empirical_mean(lambda g: int(spec.accepts(x, (r, pi), g.bits(v))), q, rng)
        ok = abs(est_hat.value - Fraction(a, q)) < params.tau
        trace.append(TraceRecord(a, q, True, est_hat.value, ok))
        if ok:
            return BResult(Fraction(a, q), pi, trace)
    return BResult(Fraction(0), None, trace)


def rv_reduce(spec: PublicCoinSpec, x, inv: Inverter, params: ReductionParams, rng) -> int:
    """Play B's proof against the randomized verifier; a None proof is rejected."""
    if not spec.randomized_verifier:
        raise DomainError("rv_reduce needs a randomized verifier")

    class _Prover(ProverStrategy):
        def start(self, r):
            return lambda prefix: rv_B(spec, x, prefix[0], inv, params, r).message

    return int(run_protocol(spec, x, _Prover(), rng).accept)


# One-sided deciders on the lifted function f(x, r) = (x, f_x(r)).

def lift_inverter(lifted: CandidateFunction, per_instance: dict) -> Inverter:
    """Combine inverters for each f_x into one for the lifted function."""
    rd_range = max(inv.rd_range for inv in per_instance.values())
    table = {}
    for key, inv in per_instance.items():
        key = key if isinstance(key, bytes) else encode(key)
        if key not in lifted.members:
            raise DomainError("inverter for an instance outside the family")
        table[key] = inv

    def answer(y, rd):
        key = encode(y[0])
        inv, member = table.get(key), lifted.members.get(key)
        if inv is None:
            return None
        u = inv.answer(y[1], rd % inv.rd_range)
        return None if u is None else (member[0],) + tuple(u)

    def sample(y, rng):
        key = encode(y[0])
        inv, member = table.get(key), lifted.members.get(key)
        if inv is None:
            return None
        u = inv.sample(y[1], rng)
        return None if u is None else (member[0],) + tuple(u)

    exact = all(inv.exact_on_success for inv in table.values())
    return Inverter(lifted, "lifted", rd_range, answer, sample, exact_on_success=exact)


def restrict_inverter(lifted_inv: Inverter, x) -> Inverter:
    """A_x: query the lifted inverter at (x, y); None unless it answers for x."""
    lifted = lifted_inv.target
    member = lifted.members.get(encode(x))
    if member is None:
        raise DomainError(f"{x!r} is not in the lifted family")
    idx, _, f_x = member

    def strip(u):
        if u is None or u[0] != idx:
            return None
        return tuple(u[1:])

    return Inverter(f_x, f"restricted<{lifted_inv.kind}>", lifted_inv.rd_range,
                    lambda y, rd: strip(lifted_inv.answer((x, y), rd)),
                    lambda y, rng: strip(lifted_inv.sample((x, y), rng)),
                    exact_on_success=lifted_inv.exact_on_success)


def one_sided_decider(family, reduce_fn: Callable[[Any, list, Any], int], inverters, x, rng,
                      with_branch: bool = False):
    """C(x): for each level sample y <- f_x(U); output 1 if A_x fails to invert y.

    Otherwise output reduce_fn(x, [A_x per level], rng). ``family`` and
    ``inverters`` are a lifted function and its inverter, or equal-length
    lists of them for the k-oracle variant.
    """
    fams = list(family) if isinstance(family, (list, tuple)) else [family]
    invs = list(inverters) if isinstance(inverters, (list, tuple)) else [inverters]
    if len(fams) != len(invs):
        raise DepthError("one inverter per lifted function")
    restricted = []
    for lifted, lifted_inv in zip(fams, invs):
        member = lifted.members.get(encode(x))
        if member is None:
            raise DomainError(f"{x!r} is not in the lifted family")
        f_x = member[2]
        a_x = restrict_inverter(lifted_inv, x)
        u = f_x.sample_input(rng)
        y = f_x(u)
        if not a_x.inverts(y, a_x.sample(y, rng)):
            return (1, "inversion-failed") if with_branch else 1
        restricted.append(a_x)
    bit = int(reduce_fn(x, restricted, rng))
    return (bit, "reduction") if with_branch else bit
