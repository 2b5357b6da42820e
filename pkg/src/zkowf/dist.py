"""Exact finite distributions over canonically encoded outcomes.

Masses are ``Fraction`` values so that equalities such as "distance equals
1/4" can be asserted without tolerance. Monte Carlo quantities elsewhere in
the package use floats and carry explicit confidence radii.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from .errors import ContractViolation, DomainError, EncodingMismatch, GridError

Probability = Fraction


def probability(value: Any) -> Fraction:
    """Coerce to an exact rational in [0, 1]."""
    if isinstance(value, float):
        raise TypeError("probabilities must be exact; got float")
    p = Fraction(value)
    if p < 0 or p > 1:
        raise ValueError(f"probability out of range: {p}")
    return p


@dataclass(frozen=True, order=True)
class BitString:
    """Fixed-length bit string; the integer reading is big-endian."""

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative length")
        if not 0 <= self.value < (1 << self.length):
            raise ValueError(f"{self.value} does not fit in {self.length} bits")

    @classmethod
    def from_str(cls, bits: str) -> "BitString":
        bits = bits.strip()
        if any(c not in "01" for c in bits):
            raise ValueError(f"not a bit string: {bits!r}")
        return cls(int(bits, 2) if bits else 0, len(bits))

    @classmethod
    def empty(cls) -> "BitString":
        return cls(0, 0)

    def __int__(self) -> int:
        return self.value

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def bit(self, i: int) -> int:
        """The i-th bit counting from the left (most significant)."""
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> (self.length - 1 - i)) & 1

    def concat(self, other: "BitString") -> "BitString":
        return BitString((self.value << other.length) | other.value, self.length + other.length)

    @staticmethod
    def join(parts: Iterable["BitString"]) -> "BitString":
        out = BitString.empty()
        for p in parts:
            out = out.concat(p)
        return out


# Canonical encoding. Each value becomes tag byte + 4-byte length + payload,
# so distinct values never share an encoding and tuples nest unambiguously.

def _int_bytes(v: int) -> bytes:
    return v.to_bytes((v.bit_length() + 8) // 8, "big", signed=True)


def _frame(tag: bytes, payload: bytes) -> bytes:
    return tag + len(payload).to_bytes(4, "big") + payload


def encode(value: Any) -> bytes:
    """Canonical length-prefixed byte encoding of an outcome.

    Supports None (the failure symbol), int, Fraction, str, bytes, BitString,
    tuples/lists of those, and any object exposing ``canonical()``.
    """
    if value is None:
        return b"N\x00\x00\x00\x00"
    if isinstance(value, bool):
        return _frame(b"I", _int_bytes(int(value)))
    if isinstance(value, int):
        return _frame(b"I", _int_bytes(value))
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return _frame(b"I", _int_bytes(value.numerator))
        return _frame(b"Q", _int_bytes(value.numerator) + b"/" + _int_bytes(value.denominator))
    if isinstance(value, BitString):
        nbytes = (value.length + 7) // 8
        return _frame(b"B", value.length.to_bytes(4, "big") + value.value.to_bytes(nbytes, "big"))
    if isinstance(value, str):
        return _frame(b"S", value.encode("utf-8"))
    if isinstance(value, (bytes, bytearray)):
        return _frame(b"Y", bytes(value))
    if isinstance(value, (tuple, list)):
        return _frame(b"T", b"".join(encode(v) for v in value))
    canon = getattr(value, "canonical", None)
    if canon is not None:
        return _frame(b"C", type(value).__name__.encode() + b":" + encode(canon()))
    raise TypeError(f"cannot encode {type(value).__name__}")


class FiniteDistribution:
    """Exact distribution: canonical encoding -> (representative value, mass)."""

    __slots__ = ("_mass", "_value", "encoding")

    def __init__(self, pairs: Iterable[tuple[Any, Any]] | Mapping[Any, Any], encoding: str = "value"):
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        mass: dict[bytes, Fraction] = {}
        value: dict[bytes, Any] = {}
        for v, m in items:
            m = Fraction(m)
            if m < 0:
                raise ValueError("negative mass")
            if m == 0:
                continue
            key = encode(v)
            if key in mass:
                mass[key] += m
            else:
                mass[key] = m
                value[key] = v
        total = sum(mass.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        self._mass = mass
        self._value = value
        self.encoding = encoding

    @classmethod
    def from_counts(cls, counts: Mapping[bytes, tuple[Any, int]], encoding: str = "value") -> "FiniteDistribution":
        """Build from integer counts keyed by encoding (fast path for enumeration)."""
        total = sum(c for _, c in counts.values())
        if total <= 0:
            raise ValueError("empty count table")
        d = cls.__new__(cls)
        d._mass = {k: Fraction(c, total) for k, (_, c) in counts.items() if c}
        d._value = {k: v for k, (v, c) in counts.items() if c}
        d.encoding = encoding
        return d

    def __len__(self) -> int:
        return len(self._mass)

    def __iter__(self) -> Iterator[Any]:
        return iter(self._value.values())

    def items(self) -> Iterator[tuple[Any, Fraction]]:
        for k, m in self._mass.items():
            yield self._value[k], m

    def support(self) -> list[Any]:
        return list(self._value.values())

    def prob(self, outcome: Any) -> Fraction:
        return self._mass.get(encode(outcome), Fraction(0))

    def masses(self) -> dict[bytes, Fraction]:
        return dict(self._mass)

    def expectation(self, fn: Callable[[Any], Any] = lambda v: v) -> Fraction:
        return sum((m * Fraction(fn(v)) for v, m in self.items()), Fraction(0))

    def relabel(self, encoding: str) -> "FiniteDistribution":
        d = FiniteDistribution.__new__(FiniteDistribution)
        d._mass, d._value, d.encoding = self._mass, self._value, encoding
        return d

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.encoding == other.encoding and self._mass == other._mass

    def __repr__(self) -> str:
        body = ", ".join(f"{v!r}: {m}" for v, m in list(self.items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"FiniteDistribution[{self.encoding}]({{{body}{more}}})"


def point(value: Any, encoding: str = "value") -> FiniteDistribution:
    return FiniteDistribution([(value, 1)], encoding)


def uniform(values: Iterable[Any], encoding: str = "value") -> FiniteDistribution:
    counts: dict[bytes, list] = {}
    for v in values:
        key = encode(v)
        if key in counts:
            counts[key][1] += 1
        else:
            counts[key] = [v, 1]
    return FiniteDistribution.from_counts({k: (v, c) for k, (v, c) in counts.items()}, encoding)


def uniform_bits(length: int, encoding: str = "value") -> FiniteDistribution:
    return uniform((BitString(v, length) for v in range(1 << length)), encoding)


def count_image(fn: Callable[[Any], Any], inputs: Iterable[Any], encoding: str = "value") -> FiniteDistribution:
    """Distribution of fn(u) for u uniform over ``inputs``, using integer counts."""
    # Group by value first and encode each distinct value once; values
    # that are equal in Python always share an encoding.
    by_value: Counter = Counter()
    unhashable: list = []
    for u in inputs:
        y = fn(u)
        try:
            by_value[y] += 1
        except TypeError:
            unhashable.append(y)
    counts: dict[bytes, list] = {}
    for y, c in list(by_value.items()) + [(y, 1) for y in unhashable]:
        key = encode(y)
        slot = counts.get(key)
        if slot is None:
            counts[key] = [y, c]
        else:
            slot[1] += c
    return FiniteDistribution.from_counts({k: (v, c) for k, (v, c) in counts.items()}, encoding)


def stat_distance(d1: FiniteDistribution, d2: FiniteDistribution) -> Fraction:
    """Exact total variation distance: half the L1 distance of the mass vectors."""
    if d1.encoding != d2.encoding:
        raise EncodingMismatch(f"{d1.encoding!r} vs {d2.encoding!r}")
    m1, m2 = d1._mass, d2._mass
    total = Fraction(0)
    for k, a in m1.items():
        total += abs(a - m2.get(k, 0))
    for k, b in m2.items():
        if k not in m1:
            total += b
    return total / 2


def push_forward(
    d: FiniteDistribution,
    f: Callable[..., Any],
    coins: Sequence[int] | None = None,
    encoding: str | None = None,
) -> FiniteDistribution:
    """Image distribution of ``d`` under f.

    With ``coins`` given, f is randomized and called as f(u, c) for every
    coin tuple c in the product of ``range(n)`` for n in coins, each with
    equal weight. A map that fails on an outcome (raises KeyError, ValueError,
    IndexError or TypeError, or returns the sentinel ``NotImplemented``)
    is reported as partial.
    """
    coin_space = list(product(*(range(n) for n in coins))) if coins is not None else None
    out: list[tuple[Any, Fraction]] = []
    for u, m in d.items():
        try:
            if coin_space is None:
                ys = [(f(u), m)]
            else:
                w = m / len(coin_space)
                ys = [(f(u, c), w) for c in coin_space]
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            raise DomainError(f"map undefined on outcome {u!r}: {exc}") from exc
        for y, w in ys:
            if y is NotImplemented:
                raise DomainError(f"map undefined on outcome {u!r}")
            out.append((y, w))
    return FiniteDistribution(out, encoding if encoding is not None else d.encoding)


def bind(d: FiniteDistribution, kernel: Callable[[Any], FiniteDistribution], encoding: str | None = None) -> FiniteDistribution:
    """Compose with a Markov kernel: u -> kernel(u)."""
    out: list[tuple[Any, Fraction]] = []
    enc = encoding
    for u, m in d.items():
        k = kernel(u)
        if enc is None:
            enc = k.encoding
        for y, w in k.items():
            out.append((y, m * w))
    return FiniteDistribution(out, enc if enc is not None else d.encoding)


def product_distribution(d1: FiniteDistribution, d2: FiniteDistribution, encoding: str | None = None) -> FiniteDistribution:
    pairs = [((a, b), ma * mb) for a, ma in d1.items() for b, mb in d2.items()]
    return FiniteDistribution(pairs, encoding or f"({d1.encoding},{d2.encoding})")


def marginal(d: FiniteDistribution, index: int | slice, encoding: str | None = None) -> FiniteDistribution:
    return push_forward(d, lambda v: v[index], encoding=encoding or f"{d.encoding}[{index}]")


def sample(d: FiniteDistribution, rng) -> Any:
    """Exact sampling: draw an integer below the common denominator."""
    table = _cdf_table(d)
    denom, cum, values = table
    u = rng.below(denom)
    lo, hi = 0, len(cum) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return values[lo]


_CDF_CACHE: dict[int, tuple[Any, tuple]] = {}


def _cdf_table(d: FiniteDistribution):
    cached = _CDF_CACHE.get(id(d))
    if cached is not None and cached[0] is d:
        return cached[1]
    keys = sorted(d._mass)
    denom = math.lcm(*(d._mass[k].denominator for k in keys))
    cum, acc = [], 0
    for k in keys:
        acc += d._mass[k].numerator * (denom // d._mass[k].denominator)
        cum.append(acc)
    table = (denom, cum, [d._value[k] for k in keys])
    if len(_CDF_CACHE) > 256:
        _CDF_CACHE.clear()
    _CDF_CACHE[id(d)] = (d, table)
    return table


@dataclass(frozen=True)
class Estimate:
    """A sample mean on the grid a / q^depth."""

    value: Fraction
    samples: int
    depth: int = 1

    def __post_init__(self):
        if self.samples < 1 or self.depth < 0:
            raise ValueError("samples must be >= 1 and depth >= 0")
        if not 0 <= self.value <= 1:
            raise ValueError(f"estimate {self.value} outside [0,1]")
        scaled = self.value * self.samples ** self.depth
        if scaled.denominator != 1:
            raise GridError(f"{self.value} is not on grid 1/{self.samples}^{self.depth}")

    @property
    def grid(self) -> int:
        return self.samples ** self.depth

    @property
    def numerator(self) -> int:
        return int(self.value * self.grid)

    def __float__(self) -> float:
        return float(self.value)


def empirical_mean(sampler: Callable[[Any], Any], q: int, rng, depth: int = 1) -> Estimate:
    """Average of q draws of ``sampler(rng)``.

    Each draw must lie in [0, 1] on the grid 1/q^(depth-1), so the mean
    lands on 1/q^depth. With the default depth the draws are bits.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    inner = q ** (depth - 1) if depth >= 1 else 1
    total = 0  # in units of 1/inner
    for _ in range(q):
        v = sampler(rng)
        if isinstance(v, int):
            if v not in (0, 1):
                raise ContractViolation(f"sampler returned {v}, outside [0,1]")
            total += v * inner
            continue
        if isinstance(v, float):
            if not v.is_integer():
                raise ContractViolation(f"sampler returned non-grid float {v}")
            v = int(v)
        v = Fraction(v)
        if v < 0 or v > 1:
            raise ContractViolation(f"sampler returned {v}, outside [0,1]")
        scaled = v * inner
        if scaled.denominator != 1:
            raise ContractViolation(f"sampler value {v} is off the 1/{inner} grid")
        total += scaled.numerator
    return Estimate(Fraction(total, q * inner), q, depth)


def hoeffding_tail(tau: Any, q: int) -> float:
    """Upper bound 2 exp(-2 tau^2 q) on Pr[|mean - E| > tau] for q bounded draws."""
    if q < 1:
        raise ValueError("q must be at least 1")
    t = float(tau)
    return 2.0 * math.exp(-2.0 * t * t * q)


def hoeffding_radius(n: int, delta: float = 1e-3) -> float:
    """Radius r with Pr[|mean - E| > r] <= delta for n bounded draws."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def dyadic_bits(p: Fraction) -> int:
    """Smallest b with p * 2^b integral; GridError if p is not dyadic."""
    p = Fraction(p)
    d = p.denominator
    if d & (d - 1):
        raise GridError(f"{p} is not dyadic")
    return d.bit_length() - 1
