"""Preimage oracles and exact or sampled measurement of their quality.

Every inverter is deterministic in (query, rd) with rd drawn from
``range(rd_range)``. ``sample`` draws rd (or an equivalent sequence of
smaller draws) from an rng, which is what lets ``enumerate_outcomes``
compute exact answer distributions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Callable

from .candidates import STREAM_RD, CandidateFunction
from .dist import dyadic_bits, encode, hoeffding_radius
from .errors import BudgetError, DomainError
from .rng import DEFAULT_BUDGET, SeededRng, enumerate_outcomes


class Inverter:
    def __init__(self, target: CandidateFunction, kind: str, rd_range: int,
                 answer: Callable[[Any, int], tuple | None],
                 sample: Callable[[Any, Any], tuple | None] | None = None,
                 exact_on_success: bool = False):
        self.target = target
        self.kind = kind
        self.rd_range = rd_range
        self._answer = answer
        self._sample = sample
        self.exact_on_success = exact_on_success

    def __repr__(self) -> str:
        return f"Inverter({self.kind}, target={self.target.label}, rd_range={self.rd_range})"

    def answer(self, y, rd: int) -> tuple | None:
        if not 0 <= rd < self.rd_range:
            raise ValueError(f"rd={rd} outside range({self.rd_range})")
        return self._answer(y, rd)

    def sample(self, y, rng) -> tuple | None:
        if self._sample is not None:
            return self._sample(y, rng)
        return self._answer(y, rng.below(self.rd_range))

    def inverts(self, y, u) -> bool:
        """The preimage check every reduction applies to an answer."""
        return u is not None and self.target.contains(u) and self.target(u) == y


def _stream_answer(sample_fn):
    return lambda y, rd: sample_fn(y, SeededRng(rd))


def canonical_inverter(f: CandidateFunction, budget: int = DEFAULT_BUDGET) -> Inverter:
    """Lexicographically least preimage, or None off the image."""
    table = f.preimages(budget)

    def answer(y, rd):
        slot = table.get(encode(y))
        return slot[1][0] if slot else None

    return Inverter(f, "canonical", 1, answer)


def _table_inverter(f: CandidateFunction, budget: int) -> Inverter:
    table = f.preimages(budget)
    rd_range = math.lcm(*(len(us) for _, us in table.values()))

    def answer(y, rd):
        slot = table.get(encode(y))
        if not slot:
            return None
        us = slot[1]
        return us[rd % len(us)]

    def sample(y, rng):
        slot = table.get(encode(y))
        if not slot:
            return None
        us = slot[1]
        return us[rng.below(len(us))]

    return Inverter(f, "distributional", rd_range, answer, sample, exact_on_success=True)


class _HeadIndex:
    """Groups head coins by visible prefix and by context, lazily."""

    def __init__(self, f: CandidateFunction, budget: int):
        lay = f.layout
        head_space = math.prod(lay.head)
        if head_space > budget:
            raise BudgetError(f"head space {head_space} exceeds budget {budget}")
        from itertools import product
        self.by_visible: dict[bytes, list[tuple]] = {}
        self.ctx_of: dict[tuple, tuple[bytes, Any]] = {}
        for rho in product(*(range(n) for n in lay.head)):
            self.by_visible.setdefault(encode(tuple(lay.visible(rho))), []).append(rho)
            ctx = lay.context(rho)
            self.ctx_of[rho] = (encode(ctx), ctx)


def _target_sum(f: CandidateFunction, y) -> tuple[bytes, int] | None:
    """(visible key, integer block-sum target) or None if y is off-grid."""
    if not isinstance(y, tuple) or not y:
        return None
    lay = f.layout
    est = y[-1]
    if not isinstance(est, (int, Fraction)) or isinstance(est, bool):
        return None
    scaled = Fraction(est) * lay.q * lay.scale
    if scaled.denominator != 1 or not 0 <= scaled <= lay.q * lay.scale:
        return None
    return encode(tuple(y[:-1])), int(scaled)


def _factored_inverter(f: CandidateFunction, budget: int) -> Inverter:
    """Exact uniform preimage sampling for block-structured candidates.

    The number of block tuples summing to a target is a coefficient of
    P^q, where P counts single-block values, so each preimage can be drawn
    with the right weight without touching the full domain.
    """
    lay = f.layout
    if lay.block_space > budget:
        raise BudgetError(f"block space {lay.block_space} exceeds budget {budget}")
    from itertools import product
    blocks = list(product(*(range(n) for n in lay.block)))
    index = _HeadIndex(f, budget)
    per_ctx: dict[bytes, tuple[dict[int, list[tuple]], list[list[int]]]] = {}

    def ctx_tables(key, ctx):
        got = per_ctx.get(key)
        if got is None:
            by_value: dict[int, list[tuple]] = {}
            for b in blocks:
                by_value.setdefault(lay.value(ctx, b), []).append(b)
            base = [0] * (lay.scale + 1)
            for v, bs in by_value.items():
                base[v] = len(bs)
            powers = [[1]]
            for _ in range(lay.q):
                prev = powers[-1]
                nxt = [0] * (len(prev) + lay.scale)
                for a, ca in enumerate(prev):
                    if ca:
                        for v, cv in enumerate(base):
                            if cv:
                                nxt[a + v] += ca * cv
                powers.append(nxt)
            got = (by_value, powers)
            per_ctx[key] = got
        return got

    def coef(poly, s):
        return poly[s] if 0 <= s < len(poly) else 0

    def sample(y, rng):
        tgt = _target_sum(f, y)
        if tgt is None:
            return None
        vkey, S = tgt
        heads = index.by_visible.get(vkey)
        if not heads:
            return None
        weights = []
        for rho in heads:
            key, ctx = index.ctx_of[rho]
            weights.append(coef(ctx_tables(key, ctx)[1][lay.q], S))
        total = sum(weights)
        if total == 0:
            return None
        pick = rng.below(total)
        for rho, w in zip(heads, weights):
            if pick < w:
                break
            pick -= w
        key, ctx = index.ctx_of[rho]
        by_value, powers = ctx_tables(key, ctx)
        chosen, remaining = [], S
        for j in range(lay.q, 0, -1):
            opts = [(v, len(bs) * coef(powers[j - 1], remaining - v)) for v, bs in by_value.items()]
            pick = rng.below(sum(w for _, w in opts))
            for v, w in opts:
                if pick < w:
                    break
                pick -= w
            bs = by_value[v]
            chosen.append(bs[rng.below(len(bs))])
            remaining -= v
        return lay.join(rho, chosen)

    return Inverter(f, "distributional", STREAM_RD, _stream_answer(sample), sample, exact_on_success=True)


def distributional_inverter(f: CandidateFunction, budget: int = DEFAULT_BUDGET, method: str = "auto") -> Inverter:
    """Uniform preimage of y driven by rd.

    ``method`` is "table" (precomputed preimage sets), "factored" (block
    layouts only) or "auto", which picks the table when the domain fits.
    """
    if method == "auto":
        method = "table" if f.size <= budget or f.layout is None else "factored"
    if method == "table":
        return _table_inverter(f, budget)
    if method == "factored":
        if f.layout is None:
            raise DomainError(f"{f.label} has no block layout")
        return _factored_inverter(f, budget)
    raise ValueError(f"unknown method {method!r}")


def unrank(domain: tuple[int, ...], idx: int) -> tuple[int, ...]:
    out = []
    for n in reversed(domain):
        idx, c = divmod(idx, n)
        out.append(c)
    return tuple(reversed(out))


def noisy_inverter(base: Inverter, delta) -> Inverter:
    """With probability delta ignore the query and return a uniform domain element."""
    delta = Fraction(delta)
    if not 0 <= delta <= 1:
        raise ValueError("delta must be in [0, 1]")
    bits = dyadic_bits(delta)
    cut = int(delta * (1 << bits))
    f = base.target
    fresh_range = f.size
    inner = fresh_range * base.rd_range

    def answer(y, rd):
        flag, rest = divmod(rd, inner)
        fresh, brd = divmod(rest, base.rd_range)
        if flag < cut:
            return unrank(f.domain, fresh)
        return base.answer(y, brd)

    def sample(y, rng):
        if cut and rng.below(1 << bits) < cut:
            return f.sample_input(rng)
        return base.sample(y, rng)

    return Inverter(f, f"noisy({delta})<{base.kind}>", (1 << bits) * inner, answer, sample,
                    exact_on_success=base.exact_on_success and delta == 0)


def conditional_inverter(f: CandidateFunction, retry_cap: int = 1 << 14, budget: int = DEFAULT_BUDGET) -> Inverter:
    """Rejection sampler for block-structured candidates.

    Each attempt picks a head uniformly among those with the right visible
    prefix and then draws blocks, stopping as soon as the target sum is out
    of reach. On success the answer is a uniform preimage; after
    ``retry_cap`` failed attempts it gives up with None.
    """
    lay = f.layout
    if lay is None:
        raise DomainError(f"{f.label} has no block layout")
    if retry_cap < 1:
        raise ValueError("retry_cap must be positive")
    index = _HeadIndex(f, budget)

    def sample(y, rng):
        tgt = _target_sum(f, y)
        if tgt is None:
            return None
        vkey, S = tgt
        heads = index.by_visible.get(vkey)
        if not heads:
            return None
        for _ in range(retry_cap):
            rho = heads[rng.below(len(heads))]
            ctx = index.ctx_of[rho][1]
            chosen, s = [], 0
            for j in range(lay.q):
                b = tuple(rng.below(n) for n in lay.block)
                s += lay.value(ctx, b)
                chosen.append(b)
                left = (lay.q - j - 1) * lay.scale
                if s > S or s + left < S:
                    break
            else:
                if s == S:
                    return lay.join(rho, chosen)
        return None

    inv = Inverter(f, "conditional", STREAM_RD, _stream_answer(sample), sample, exact_on_success=True)
    inv.retry_cap = retry_cap
    return inv


@dataclass
class DeviationReport:
    success_rate: Any
    distributional_deviation: Any
    method: str
    samples: int | None = None
    radius: float | None = None
    hoeffding_radius: float | None = None
    deviation_kind: str = "exact"

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("success_rate", "distributional_deviation"):
            v = d[key]
            d[key] = str(v) if isinstance(v, Fraction) else v
        return d


def _exact_deviation(f: CandidateFunction, inv: Inverter, budget: int) -> DeviationReport:
    table = f.preimages(budget)
    N = f.size
    dist_sum = Fraction(0)
    success = Fraction(0)
    for key, (y, us) in table.items():
        c = len(us)
        answers = enumerate_outcomes(lambda rng: inv.sample(y, rng), budget)
        pre = {encode(u) for u in us}
        seen = set()
        for a, pa in answers.items():
            ka = encode(a)
            seen.add(ka)
            x_mass = Fraction(1, N) if ka in pre else Fraction(0)
            y_mass = Fraction(c, N) * pa
            dist_sum += abs(x_mass - y_mass)
            if ka in pre:
                success += y_mass
        dist_sum += Fraction(len(pre - seen), N)
    return DeviationReport(success, dist_sum / 2, "exact")


def _mc_deviation(f: CandidateFunction, inv: Inverter, trials: int, rng, delta: float) -> DeviationReport:
    hits = 0
    for t in range(trials):
        sub = rng.child("deviation", t)
        u = f.sample_input(sub)
        y = f(u)
        if inv.inverts(y, inv.sample(y, sub)):
            hits += 1
    rate = hits / trials
    sigma = math.sqrt(rate * (1 - rate) / trials)
    kind = "estimate" if inv.exact_on_success else "lower-bound"
    return DeviationReport(rate, 1 - rate, "monte-carlo", trials, 3 * sigma, hoeffding_radius(trials, delta), kind)


def measure_deviation(f: CandidateFunction, inv: Inverter, method: str = "exact", trials: int | None = None,
                      rng=None, budget: int = DEFAULT_BUDGET, delta: float = 1e-3) -> DeviationReport:
    """Success rate and distributional deviation of ``inv`` on ``f``.

    The Monte Carlo method estimates the failure rate of the preimage check.
    For inverters whose successful answers are exactly uniform preimages the
    deviation equals that failure rate; otherwise it is only a lower bound,
    and the report says so.
    """
    if inv.target is not f:
        raise DomainError("inverter targets a different function")
    if method == "exact":
        return _exact_deviation(f, inv, budget)
    if method in ("monte-carlo", "mc"):
        if not trials or trials < 1:
            raise ValueError("monte-carlo measurement needs trials >= 1")
        return _mc_deviation(f, inv, trials, rng if rng is not None else SeededRng(0), delta)
    raise ValueError(f"unknown method {method!r}")
