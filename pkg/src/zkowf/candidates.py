"""Candidate one-way functions built from a protocol's simulator.

Every candidate is a deterministic map over a product of finite ranges.
Candidates whose input carries q independent blocks (the estimate-based
ones) also expose a ``BlockLayout`` so that inverters can work block by
block instead of enumerating the whole domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod
from typing import Any, Callable, Sequence

from .dist import BitString, FiniteDistribution, encode
from .errors import BudgetError, DepthError, DomainError, GridError, ScheduleError
from .protocol import PublicCoinSpec
from .rng import DEFAULT_BUDGET

GRID_CAP = 1 << 20
STREAM_RD = 1 << 64


@dataclass(frozen=True, eq=False)
class BlockLayout:
    """Input = head coins, then q blocks stored component-major.

    The output is visible(head) + (sum of block values / (q * scale),).
    """

    head: tuple[int, ...]
    q: int
    block: tuple[int, ...]
    scale: int
    visible: Callable[[tuple], tuple]
    context: Callable[[tuple], Any]
    value: Callable[[Any, tuple], int]

    def split(self, u: tuple) -> tuple[tuple, list[tuple]]:
        h, q = len(self.head), self.q
        rest = u[h:]
        return u[:h], [tuple(rest[c * q + j] for c in range(len(self.block))) for j in range(q)]

    def join(self, head: tuple, blocks: Sequence[tuple]) -> tuple:
        return tuple(head) + tuple(b[c] for c in range(len(self.block)) for b in blocks)

    def evaluate(self, u: tuple) -> tuple:
        head, blocks = self.split(u)
        ctx = self.context(head)
        total = sum(self.value(ctx, b) for b in blocks)
        return tuple(self.visible(head)) + (Fraction(total, self.q * self.scale),)

    @property
    def block_space(self) -> int:
        return prod(self.block)


class CandidateFunction:
    """Deterministic f over the product of ``range(n)`` for n in ``domain``."""

    def __init__(self, label: str, domain: Sequence[int], fn: Callable[[tuple], Any],
                 layout: BlockLayout | None = None, coins_of: Callable[[tuple], tuple] | None = None,
                 spec: PublicCoinSpec | None = None, x: Any = None, level: int | None = None):
        self.label = label
        self.domain = tuple(domain)
        self._fn = fn
        self.layout = layout
        self._coins_of = coins_of
        self.spec = spec
        self.x = x
        self.level = level
        self.members: dict | None = None
        self._table = None

    def __repr__(self) -> str:
        return f"CandidateFunction({self.label!r}, domain={self.domain})"

    def __call__(self, u: tuple) -> Any:
        return self._fn(tuple(u))

    def eval(self, u: tuple) -> Any:
        return self._fn(tuple(u))

    @property
    def size(self) -> int:
        return prod(self.domain)

    def contains(self, u) -> bool:
        return (isinstance(u, tuple) and len(u) == len(self.domain)
                and all(isinstance(c, int) and 0 <= c < n for c, n in zip(u, self.domain)))

    def inputs(self, budget: int = DEFAULT_BUDGET):
        if self.size > budget:
            raise BudgetError(f"{self.label}: domain of {self.size} exceeds budget {budget}")
        return product(*(range(n) for n in self.domain))

    def sample_input(self, rng) -> tuple:
        return tuple(rng.below(n) for n in self.domain)

    def coins_of(self, u: tuple) -> tuple:
        """The simulator-coin part of an input (the projection P~ uses)."""
        return self._coins_of(u) if self._coins_of else tuple(u)

    def preimages(self, budget: int = DEFAULT_BUDGET) -> dict[bytes, tuple[Any, list[tuple]]]:
        """encode(y) -> (y, preimages in lexicographic order); cached."""
        if self._table is None:
            table: dict[bytes, tuple[Any, list]] = {}
            for u in self.inputs(budget):
                y = self._fn(u)
                key = encode(y)
                slot = table.get(key)
                if slot is None:
                    table[key] = (y, [u])
                else:
                    slot[1].append(u)
            self._table = table
        return self._table

    def image_distribution(self, budget: int = DEFAULT_BUDGET, encoding: str | None = None):
        table = self.preimages(budget)
        return FiniteDistribution.from_counts({k: (y, len(us)) for k, (y, us) in table.items()},
                                              encoding or f"image/{self.label}")


def _require_deterministic(spec: PublicCoinSpec):
    if spec.randomized_verifier:
        raise DomainError(f"{spec.name} has a randomized verifier; use rv_candidate")


def nizk_candidate(spec: PublicCoinSpec, x) -> CandidateFunction:
    """f_x(rho) = (r, V(x; Sim(x; rho)))."""
    if spec.k != 1:
        raise ScheduleError("nizk_candidate needs a one-round protocol")
    _require_deterministic(spec)

    def fn(rho):
        tr = spec.simulator(x, rho)
        return (tr[0], int(spec.accepts(x, tr)))

    return CandidateFunction("nizk", spec.sim_coins, fn, spec=spec, x=x)


def pc_candidate(spec: PublicCoinSpec, x) -> CandidateFunction:
    """f_x(i, rho): the simulated prefix through r_i, then a (i = k) or the flag 1.

    The round index i is stored as i - 1 in the first input coordinate.
    """
    _require_deterministic(spec)
    k = spec.k

    def fn(u):
        i = u[0] + 1
        tr = spec.simulator(x, u[1:])
        if i == k:
            return tuple(tr[: 2 * k - 1]) + (int(spec.accepts(x, tr)),)
        return tuple(tr[: 2 * i - 1]) + (1,)

    return CandidateFunction("pc", (k,) + spec.sim_coins, fn, coins_of=lambda u: tuple(u[1:]), spec=spec, x=x)


@dataclass(frozen=True)
class ReductionParams:
    p: int
    q: int
    tau: Fraction
    est_grid_depth: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be a positive integer")
        if self.q < 1:
            raise ValueError("q must be at least 1")
        object.__setattr__(self, "tau", Fraction(self.tau))
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @classmethod
    def coupled_preset(cls, n: int, p: int) -> "ReductionParams":
        """The coupling q = n p^2, tau = 1/p."""
        return cls(p=p, q=n * p * p, tau=Fraction(1, p))

    def grid(self, levels: int) -> int:
        g = self.q ** levels
        if g > GRID_CAP:
            raise GridError(f"grid q^{levels} = {g} exceeds the cap {GRID_CAP}")
        return g


class OracleStack:
    """Inverters (A_i, ..., A_k) plus a memo shared by everything built on them."""

    def __init__(self, inverters: Sequence, memo: dict | None = None):
        self.inverters = tuple(inverters)
        self.memo = memo if memo is not None else {}

    def __len__(self) -> int:
        return len(self.inverters)

    def __getitem__(self, i):
        return self.inverters[i]

    def drop(self, n: int = 1) -> "OracleStack":
        return OracleStack(self.inverters[n:], self.memo)

    def rd_range(self) -> int:
        """Randomness range of one B call at the top of this stack."""
        if len(self.inverters) == 1:
            return self.inverters[0].rd_range
        return STREAM_RD


def cr_candidate(spec: PublicCoinSpec, x, i: int, oracles: OracleStack | Sequence = (),
                 params: ReductionParams | None = None) -> CandidateFunction:
    """Level-i function of the constant-round construction.

    Level k: rho -> (r_1, pi_1, ..., r_k, a). Level i < k: the input adds
    q next-round coins sigma_j and q randomness blocks rd_j, and the last
    output entry is the mean of B_{i+1,1}(prefix, pi_i, sigma_j; rd_j).
    """
    _require_deterministic(spec)
    k = spec.k
    if not 1 <= i <= k:
        raise ScheduleError(f"level {i} outside [1, {k}]")
    if not isinstance(oracles, OracleStack):
        oracles = OracleStack(oracles)
    if len(oracles) != k - i:
        raise DepthError(f"level {i} of a {k}-round protocol needs {k - i} oracles, got {len(oracles)}")
    if i == k:
        def fn(rho):
            tr = spec.simulator(x, rho)
            return tuple(tr[: 2 * k - 1]) + (int(spec.accepts(x, tr)),)
        return CandidateFunction(f"cr-level-{k}", spec.sim_coins, fn, spec=spec, x=x, level=k)

    if params is None:
        raise ValueError("levels below k need ReductionParams")
    from .reductions import b_value_rd  # reductions imports this module

    q = params.q
    params.grid(k - i)
    scale = params.grid(k - i - 1)
    m_next = spec.coin_bits[i]
    rd_range = oracles.rd_range()

    def context(rho):
        return tuple(spec.simulator(x, rho)[: 2 * i])

    cache: dict | None = {} if rd_range <= 1 << 16 else None

    def value(ctx, block):
        if cache is not None:
            hit = cache.get((ctx, block))
            if hit is not None:
                return hit
        sigma, rd = block
        b = b_value_rd(spec, x, i + 1, ctx + (BitString(sigma, m_next),), oracles, params, rd)
        v = b.numerator * (scale // b.denominator)
        if cache is not None:
            cache[(ctx, block)] = v
        return v

    layout = BlockLayout(
        head=spec.sim_coins, q=q, block=(1 << m_next, rd_range), scale=scale,
        visible=lambda rho: tuple(spec.simulator(x, rho)[: 2 * i - 1]),
        context=context, value=value,
    )
    domain = spec.sim_coins + (1 << m_next,) * q + (rd_range,) * q
    h = len(spec.sim_coins)
    return CandidateFunction(f"cr-level-{i}", domain, layout.evaluate, layout=layout,
                             coins_of=lambda u: tuple(u[:h]), spec=spec, x=x, level=i)


def rv_candidate(spec: PublicCoinSpec, x, q: int) -> CandidateFunction:
    """f_x(rho, sigma_1..sigma_q) = (r, mean of V(x; r, pi, sigma_j))."""
    if spec.k != 1:
        raise ScheduleError("rv_candidate needs a one-round protocol")
    if not spec.randomized_verifier:
        raise DomainError(f"{spec.name} has a deterministic verifier; use nizk_candidate")
    if q < 1:
        raise ValueError("q must be at least 1")

    def context(rho):
        return tuple(spec.simulator(x, rho))

    layout = BlockLayout(
        head=spec.sim_coins, q=q, block=(1 << spec.verifier_coin_bits,), scale=1,
        visible=lambda rho: (spec.simulator(x, rho)[0],),
        context=context, value=lambda ctx, b: int(spec.accepts(x, ctx, b[0])),
    )
    domain = spec.sim_coins + (1 << spec.verifier_coin_bits,) * q
    h = len(spec.sim_coins)
    return CandidateFunction("rv", domain, layout.evaluate, layout=layout,
                             coins_of=lambda u: tuple(u[:h]), spec=spec, x=x)


def lift_candidate(family: Sequence[tuple[Any, CandidateFunction]] | dict) -> CandidateFunction:
    """f(x, r) = (x, f_x(r)); the first input coordinate indexes the family."""
    pairs = list(family.items()) if isinstance(family, dict) else list(family)
    if not pairs:
        raise DomainError("empty family")
    shape = pairs[0][1].domain
    for x, f in pairs:
        if f.domain != shape:
            raise DomainError(f"member for {x!r} has domain {f.domain}, expected {shape}")
    xs = [x for x, _ in pairs]
    fs = [f for _, f in pairs]

    def fn(u):
        return (xs[u[0]], fs[u[0]](u[1:]))

    lifted = CandidateFunction(f"lifted-{fs[0].label}", (len(xs),) + shape, fn,
                               coins_of=lambda u: fs[u[0]].coins_of(u[1:]))
    lifted.members = {encode(x): (idx, x, f) for idx, (x, f) in enumerate(pairs)}
    return lifted
