"""Seeded randomness and exhaustive enumeration of randomized procedures.

``SeededRng`` is BLAKE2b in counter mode, keyed by the master seed and a
hierarchical stream path. ``EnumeratingRng`` has the same interface but
walks every possible sequence of draws, which turns any randomized
procedure written against the interface into an exact distribution.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction
from typing import Any, Callable, Sequence

from .dist import FiniteDistribution, encode
from .errors import BudgetError

DEFAULT_BUDGET = 1 << 24
SEED_BITS = 64


class SeededRng:
    """Deterministic bit stream for a (seed, path) pair."""

    def __init__(self, seed: int, path: tuple = ()):
        if not 0 <= seed < (1 << SEED_BITS):
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = seed
        self.path = tuple(path)
        self._key = hashlib.blake2b(encode((seed, self.path)), digest_size=32).digest()
        self._counter = 0
        self._buf = 0
        self._nbits = 0

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, path={self.path!r})"

    def child(self, *labels: Any) -> "SeededRng":
        """Independent stream for path + labels; does not advance this stream."""
        return SeededRng(self.seed, self.path + labels)

    def _refill(self):
        block = hashlib.blake2b(self._counter.to_bytes(16, "big"), key=self._key, digest_size=64).digest()
        self._counter += 1
        self._buf = (self._buf << 512) | int.from_bytes(block, "big")
        self._nbits += 512

    def bits(self, n: int) -> int:
        if n < 0:
            raise ValueError("negative bit count")
        if n == 0:
            return 0
        while self._nbits < n:
            self._refill()
        self._nbits -= n
        v = self._buf >> self._nbits
        self._buf &= (1 << self._nbits) - 1
        return v

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by exact rejection sampling."""
        if n < 1:
            raise ValueError("range must be non-empty")
        if n == 1:
            return 0
        k = (n - 1).bit_length()
        while True:
            v = self.bits(k)
            if v < n:
                return v

    def coins(self, ranges: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.below(n) for n in ranges)

    def seed64(self) -> int:
        return self.bits(SEED_BITS)


def derive_seed(master: int, *labels: Any) -> int:
    """A 64-bit seed for a named sub-experiment, independent of call order."""
    return SeededRng(master, labels).seed64()


class EnumeratingRng:
    """Drop-in rng that explores every draw sequence depth first.

    ``child`` returns the same object, so a procedure that consumes from
    child streams is enumerated as if all draws came from one stream. This
    is exact as long as each stream is drawn from only once per path.
    """

    def __init__(self, max_branch: int = DEFAULT_BUDGET):
        self._choice: list[int] = []
        self._radix: list[int] = []
        self._pos = 0
        self.max_branch = max_branch

    def child(self, *labels: Any) -> "EnumeratingRng":
        return self

    def below(self, n: int) -> int:
        if n < 1:
            raise ValueError("range must be non-empty")
        if n == 1:
            return 0
        if n > self.max_branch:
            raise BudgetError(f"a single draw has {n} outcomes; budget is {self.max_branch}")
        pos = self._pos
        if pos < len(self._choice):
            if self._radix[pos] != n:
                raise RuntimeError("procedure is not deterministic given its draws")
            v = self._choice[pos]
        else:
            self._choice.append(0)
            self._radix.append(n)
            v = 0
        self._pos = pos + 1
        return v

    def bits(self, n: int) -> int:
        return self.below(1 << n) if n else 0

    def coins(self, ranges: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.below(n) for n in ranges)

    def seed64(self) -> int:
        return self.below(1 << SEED_BITS)

    def _restart(self):
        self._pos = 0

    def _finish(self) -> int:
        """Truncate unused replayed draws and return the path's weight denominator."""
        del self._choice[self._pos:]
        del self._radix[self._pos:]
        w = 1
        for r in self._radix:
            w *= r
        return w

    def _advance(self) -> bool:
        while self._choice:
            self._choice[-1] += 1
            if self._choice[-1] < self._radix[-1]:
                return True
            self._choice.pop()
            self._radix.pop()
        return False


def enumerate_outcomes(
    procedure: Callable[[Any], Any],
    budget: int = DEFAULT_BUDGET,
    encoding: str = "value",
) -> FiniteDistribution:
    """Exact output distribution of ``procedure(rng)`` over all its draws."""
    er = EnumeratingRng(max_branch=budget)
    acc: dict[bytes, list] = {}
    runs = 0
    while True:
        er._restart()
        out = procedure(er)
        denom = er._finish()
        key = encode(out)
        slot = acc.get(key)
        if slot is None:
            acc[key] = [out, Fraction(1, denom)]
        else:
            slot[1] += Fraction(1, denom)
        runs += 1
        if runs > budget:
            raise BudgetError(f"enumeration exceeded {budget} paths")
        if not er._advance():
            break
    return FiniteDistribution([(v, m) for v, m in acc.values()], encoding)


def exact_probability(procedure: Callable[[Any], Any], outcome: Any = 1, budget: int = DEFAULT_BUDGET) -> Fraction:
    return enumerate_outcomes(procedure, budget).prob(outcome)
