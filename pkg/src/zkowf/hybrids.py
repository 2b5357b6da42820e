"""Exact hybrid distributions from the analysis of the public-coin reduction.

Each hybrid is written as a sampler against the rng interface, exactly as
its definition reads, and ``enumerate_outcomes`` turns the sampler into an
exact distribution. Outputs share one encoding per protocol so distances
between any two hybrids are well defined.

Kinds:
  S        Sim(x) prefix through r_k, then V's decision
  P        honest run prefix through r_k, then V's decision (alias P_full)
  I        P~ plays every round; prefix through r_k, then 1
  S_i      Sim for rounds < i, P~ from round i on; ends in 1
  P_i      honest prover for rounds < i, P~ from round i on; ends in 1
  M_i      Sim through r_i, P~ from pi_i on; ends in 1
"""

from __future__ import annotations

from .dist import BitString, FiniteDistribution
from .errors import RelationError, ScheduleError
from .inverters import Inverter
from .protocol import PublicCoinSpec
from .reductions import PCProver
from .rng import DEFAULT_BUDGET, enumerate_outcomes

KINDS = ("S", "P", "P_full", "I", "S_i", "P_i", "M_i")


def hybrid_encoding(spec: PublicCoinSpec) -> str:
    return f"hybrid/{spec.name}"


def hybrid_sampler(spec: PublicCoinSpec, x, w, inverter: Inverter | None, kind: str, i: int | None = None):
    """The sampler (rng -> outcome) behind ``hybrid_distribution``."""
    k = spec.k
    if kind not in KINDS:
        raise ValueError(f"unknown hybrid kind {kind!r}")
    if kind in ("S_i", "P_i", "M_i"):
        if i is None or not 1 <= i <= k:
            raise ScheduleError(f"kind {kind} needs a level in [1, {k}]")
    needs_prover = kind in ("I", "S_i", "P_i") or (kind == "M_i" and i < k)
    if needs_prover and inverter is None:
        raise ValueError(f"kind {kind} calls P~ and needs an inverter")
    prover = PCProver(spec, x, inverter) if inverter is not None else None

    def coin(j, rng):
        m = spec.coin_bits[j - 1]
        return BitString(rng.bits(m), m)

    def finish(tr: tuple, start: int, rng) -> tuple:
        for j in range(start, k + 1):
            tr = tr + (coin(j, rng),)
            if j == k:
                return tr + (1,)
            tr = tr + (prover.message(tr, rng),)
        return tr + (1,)

    def honest_prefix(rounds: int, rng) -> tuple:
        pcoins = rng.coins(spec.prover_coins)
        tr: tuple = ()
        for j in range(1, rounds + 1):
            tr = tr + (coin(j, rng),)
            tr = tr + (spec.prover(x, w, pcoins, tr),)
        return tr, pcoins

    def sampler(rng) -> tuple:
        if kind == "S":
            tr = tuple(spec.simulator(x, rng.coins(spec.sim_coins)))
            return tr[: 2 * k - 1] + (int(spec.accepts(x, tr)),)
        if kind in ("P", "P_full"):
            pcoins = rng.coins(spec.prover_coins)
            tr: tuple = ()
            for j in range(1, k + 1):
                tr = tr + (coin(j, rng),)
                tr = tr + (spec.prover(x, w, pcoins, tr),)
            return tr[: 2 * k - 1] + (int(spec.accepts(x, tr)),)
        if kind == "I":
            return finish((), 1, rng)
        if kind == "S_i":
            tr = tuple(spec.simulator(x, rng.coins(spec.sim_coins)))[: 2 * (i - 1)]
            return finish(tr, i, rng)
        if kind == "P_i":
            tr, _ = honest_prefix(i - 1, rng)
            return finish(tr, i, rng)
        tr = tuple(spec.simulator(x, rng.coins(spec.sim_coins)))[: 2 * i - 1]
        if i == k:
            return tr + (1,)
        tr = tr + (prover.message(tr, rng),)
        return finish(tr, i + 1, rng)

    return sampler


def hybrid_distribution(spec: PublicCoinSpec, x, w, inverter: Inverter | None, kind: str,
                        i: int | None = None, budget: int = DEFAULT_BUDGET) -> FiniteDistribution:
    """Exact distribution of a hybrid, enumerating protocol, simulator and inverter coins."""
    if kind in ("P", "P_full", "P_i") and not spec.relation(x, w):
        raise RelationError("hybrids with the honest prover need a valid witness")
    return enumerate_outcomes(hybrid_sampler(spec, x, w, inverter, kind, i), budget, hybrid_encoding(spec))
