"""Executable public-coin protocols and exact measurement of their errors.

A transcript is a tuple (r_1, pi_1, ..., r_k, pi_k). Verifier messages r_i
are BitStrings of the scheduled length (length 0 when the prover speaks
first); prover messages pi_i are integers in ``range(message_sizes[i])``.
Coin spaces are given as tuples of range sizes rather than bit lengths so
that, say, a uniform permutation of n vertices is a single coin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import prod
from typing import Any, Callable, Sequence

from .dist import BitString, FiniteDistribution, stat_distance, count_image
from .errors import BudgetError, RelationError, ScheduleError
from .rng import DEFAULT_BUDGET

Transcript = tuple
MAX_SEARCH_MESSAGE = 1 << 16


@dataclass(frozen=True, eq=False)
class PublicCoinSpec:
    name: str
    n: int
    k: int
    coin_bits: tuple[int, ...]
    message_sizes: tuple[int, ...]
    prover_coins: tuple[int, ...]
    sim_coins: tuple[int, ...]
    membership: Callable[[Any], bool]
    relation: Callable[[Any, Any], bool]
    prover: Callable[[Any, Any, tuple, tuple], int]
    verifier: Callable[..., bool]
    simulator: Callable[[Any, tuple], tuple]
    verifier_coin_bits: int = 0
    soundness_bound: Fraction | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ScheduleError("a protocol needs at least one round")
        if len(self.coin_bits) != self.k or len(self.message_sizes) != self.k:
            raise ScheduleError("coin_bits and message_sizes must have one entry per round")
        if any(m < 0 for m in self.coin_bits) or any(s < 1 for s in self.message_sizes):
            raise ScheduleError("bad schedule")

    @property
    def t(self) -> int:
        """Number of real messages; an empty first verifier message does not count."""
        return 2 * self.k - 1 if self.coin_bits[0] == 0 else 2 * self.k

    @property
    def randomized_verifier(self) -> bool:
        return self.verifier_coin_bits > 0

    @property
    def sim_space(self) -> int:
        return prod(self.sim_coins)

    def sim_inputs(self):
        return product(*(range(n) for n in self.sim_coins))

    def check_prefix(self, prefix: Sequence) -> None:
        """Validate that ``prefix`` follows the schedule."""
        if len(prefix) > 2 * self.k:
            raise ScheduleError(f"prefix of length {len(prefix)} exceeds {2 * self.k}")
        for j, msg in enumerate(prefix):
            i = j // 2
            if j % 2 == 0:
                if not isinstance(msg, BitString) or msg.length != self.coin_bits[i]:
                    raise ScheduleError(f"message {j + 1} must be {self.coin_bits[i]} verifier bits")
            elif msg is not None and not (isinstance(msg, int) and 0 <= msg < self.message_sizes[i]):
                raise ScheduleError(f"message {j + 1} must be an int below {self.message_sizes[i]}")

    def accepts(self, x: Any, transcript: tuple, sigma: int | None = None) -> bool:
        if any(m is None for m in transcript):
            return False
        if self.randomized_verifier:
            if sigma is None:
                raise ScheduleError("randomized verifier needs its coin")
            return bool(self.verifier(x, transcript, sigma))
        return bool(self.verifier(x, transcript))

    def acceptance(self, x: Any, transcript: tuple) -> Fraction:
        """Pr over verifier coins that the full transcript is accepted."""
        if not self.randomized_verifier:
            return Fraction(int(self.accepts(x, transcript)))
        v = self.verifier_coin_bits
        hits = sum(self.accepts(x, transcript, s) for s in range(1 << v))
        return Fraction(hits, 1 << v)


class NizkSpec(PublicCoinSpec):
    """Single-round protocol: r is the common reference string."""

    def __post_init__(self):
        super().__post_init__()
        if self.k != 1:
            raise ScheduleError("a NIZK has exactly one round")

    @property
    def m(self) -> int:
        return self.coin_bits[0]


@dataclass(frozen=True)
class ErrorProfile:
    eps_c: Fraction
    eps_s: Fraction
    eps_z: Fraction

    def __post_init__(self):
        for name in ("eps_c", "eps_s", "eps_z"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0,1]")

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.eps_c, self.eps_s, self.eps_z)


def transcript_encoding(spec: PublicCoinSpec) -> str:
    return f"transcript/{spec.name}"


def _honest_transcript(spec: PublicCoinSpec, x, w, pcoins: tuple, vcoins: tuple) -> tuple:
    tr: tuple = ()
    for i in range(spec.k):
        tr = tr + (BitString(vcoins[i], spec.coin_bits[i]),)
        tr = tr + (spec.prover(x, w, pcoins, tr),)
    return tr


def view_distribution(spec: PublicCoinSpec, x, w, budget: int = DEFAULT_BUDGET) -> FiniteDistribution:
    """Exact distribution of the honest transcript, over prover and verifier coins."""
    if not spec.relation(x, w):
        raise RelationError(f"witness does not satisfy the relation for {x!r}")
    size = prod(spec.prover_coins) * (1 << sum(spec.coin_bits))
    if size > budget:
        raise BudgetError(f"view enumeration needs {size} assignments; budget {budget}")
    pspace = list(product(*(range(n) for n in spec.prover_coins)))
    vspace = product(*(range(1 << m) for m in spec.coin_bits))
    inputs = ((pc, vc) for vc in vspace for pc in pspace)
    return count_image(lambda c: _honest_transcript(spec, x, w, c[0], c[1]), inputs, transcript_encoding(spec))


def sim_distribution(spec: PublicCoinSpec, x, budget: int = DEFAULT_BUDGET) -> FiniteDistribution:
    """Exact distribution of Sim(x; rho) for uniform rho."""
    if spec.sim_space > budget:
        raise BudgetError(f"simulator space {spec.sim_space} exceeds budget {budget}")
    return count_image(lambda rho: tuple(spec.simulator(x, rho)), spec.sim_inputs(), transcript_encoding(spec))


def sim_project(spec: PublicCoinSpec, x, rho: tuple, j: int) -> tuple:
    """First j messages of Sim(x; rho)."""
    if not 0 <= j <= 2 * spec.k:
        raise ScheduleError(f"j={j} outside [0, {2 * spec.k}]")
    return tuple(spec.simulator(x, rho))[:j]


def completeness_error(spec: PublicCoinSpec, x, w, budget: int = DEFAULT_BUDGET) -> Fraction:
    view = view_distribution(spec, x, w, budget)
    return 1 - view.expectation(lambda tr: spec.acceptance(x, tr))


def best_prover_value(spec: PublicCoinSpec, x, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Maximum acceptance probability over all prover strategies, by backward induction.

    Verifier coin nodes average over their children, prover nodes take the
    best reply. Falls back to the protocol's analytic ``soundness_bound`` when
    a message space is too large to search.
    """
    leaves = (1 << spec.verifier_coin_bits)
    for m, s in zip(spec.coin_bits, spec.message_sizes):
        leaves *= (1 << m) * s
    if leaves > budget or max(spec.message_sizes) > MAX_SEARCH_MESSAGE:
        if spec.soundness_bound is not None:
            return spec.soundness_bound
        raise BudgetError(f"best-response search needs {leaves} leaves; no analytic bound supplied")

    def value(prefix: tuple) -> Fraction:
        j = len(prefix)
        if j == 2 * spec.k:
            return spec.acceptance(x, prefix)
        i = j // 2
        if j % 2 == 0:
            m = spec.coin_bits[i]
            total = sum((value(prefix + (BitString(r, m),)) for r in range(1 << m)), Fraction(0))
            return total / (1 << m)
        best = Fraction(0)
        for pi in range(spec.message_sizes[i]):
            v = value(prefix + (pi,))
            if v > best:
                best = v
                if best == 1:
                    break
        return best

    return value(())


def measure_error_profile(spec: PublicCoinSpec, x_yes, w, x_no, budget: int = DEFAULT_BUDGET) -> ErrorProfile:
    """(eps_c, eps_s, eps_z) measured by exhaustive enumeration."""
    if spec.membership(x_no):
        raise RelationError(f"{x_no!r} is a yes-instance")
    view = view_distribution(spec, x_yes, w, budget)
    eps_c = 1 - view.expectation(lambda tr: spec.acceptance(x_yes, tr))
    eps_z = stat_distance(sim_distribution(spec, x_yes, budget), view)
    eps_s = best_prover_value(spec, x_no, budget)
    return ErrorProfile(eps_c, eps_s, eps_z)


class ProverStrategy:
    """Per-run prover. ``start`` opens a session returning prefix -> message."""

    def start(self, rng) -> Callable[[tuple], Any]:
        raise NotImplementedError


class FunctionStrategy(ProverStrategy):
    """Wraps a stateless per-round function (prefix, rng) -> message."""

    def __init__(self, fn: Callable[[tuple, Any], Any]):
        self.fn = fn

    def start(self, rng):
        return lambda prefix: self.fn(prefix, rng)


class HonestStrategy(ProverStrategy):
    def __init__(self, spec: PublicCoinSpec, x, w):
        self.spec, self.x, self.w = spec, x, w

    def start(self, rng):
        coins = rng.child("prover").coins(self.spec.prover_coins)
        return lambda prefix: self.spec.prover(self.x, self.w, coins, prefix)


@dataclass(frozen=True)
class ProtocolRun:
    transcript: tuple
    accept: bool


def run_protocol(spec: PublicCoinSpec, x, strategy: ProverStrategy, rng) -> ProtocolRun:
    """Play the strategy against the honest verifier.

    A ``None`` message means the prover gave up; the run stops and rejects.
    """
    session = strategy.start(rng)
    tr: tuple = ()
    for i in range(spec.k):
        tr = tr + (BitString(rng.bits(spec.coin_bits[i]), spec.coin_bits[i]),)
        msg = session(tr)
        if msg is None:
            return ProtocolRun(tr + (None,), False)
        if isinstance(msg, bool) or not isinstance(msg, int) or not 0 <= msg < spec.message_sizes[i]:
            raise ScheduleError(f"round {i + 1} message {msg!r} outside range({spec.message_sizes[i]})")
        tr = tr + (msg,)
    sigma = rng.bits(spec.verifier_coin_bits) if spec.randomized_verifier else None
    return ProtocolRun(tr, spec.accepts(x, tr, sigma))
