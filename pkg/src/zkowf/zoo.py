"""Concrete protocols with exactly known error profiles.

Dial protocols realize any dyadic (eps_c, eps_s, eps_z) over the toy
language {x : first bit of x is 1}. The graph-isomorphism protocol is the
classic three-message sigma protocol, prover first.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import factorial
from pathlib import Path

from .dist import BitString, encode
from .errors import GridError, ParseError, ScheduleError
from .protocol import NizkSpec, PublicCoinSpec

MAX_PROOF_BITS = 16
MAX_GRAPH_VERTICES = 8


def _on_grid(eps: Fraction, bits: int, name: str) -> int:
    scaled = Fraction(eps) * (1 << bits)
    if scaled.denominator != 1:
        raise GridError(f"{name}={eps} is not a multiple of 2^-{bits}")
    return int(scaled)


@dataclass(frozen=True)
class DialProfile:
    eps_c: Fraction
    eps_s: Fraction
    eps_z: Fraction
    m: int = 10
    ell_z: int = 4
    tag_seed: int = 0
    proof_bits: int = 4

    def __post_init__(self):
        for name in ("eps_c", "eps_s", "eps_z"):
            v = Fraction(getattr(self, name))
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0,1]")
            object.__setattr__(self, name, v)
        if self.eps_c + self.eps_s > 1:
            raise ValueError("eps_c + eps_s must not exceed 1")
        if not 1 <= self.proof_bits <= MAX_PROOF_BITS:
            raise ValueError(f"proof_bits must be in [1, {MAX_PROOF_BITS}]")
        if self.m < 0 or self.ell_z < 0:
            raise ValueError("bit lengths must be nonnegative")
        if not 0 <= self.tag_seed < (1 << 64):
            raise ValueError("tag_seed must be a 64-bit value")
        _on_grid(self.eps_c, self.m, "eps_c")
        _on_grid(self.eps_s, self.m, "eps_s")
        _on_grid(self.eps_z, self.ell_z, "eps_z")


def _tagger(seed: int, proof_bits: int):
    key = seed.to_bytes(8, "big")

    @lru_cache(maxsize=1 << 18)
    def tag(*parts) -> int:
        h = hashlib.blake2b(encode(parts), digest_size=8, key=key).digest()
        return int.from_bytes(h, "big") >> (64 - proof_bits)

    return tag


def dial_member(x: BitString) -> bool:
    return isinstance(x, BitString) and x.length >= 1 and x.bit(0) == 1


def _dial_relation(x, w) -> bool:
    return dial_member(x) and w == x


def make_dial_nizk(profile: DialProfile, verifier_noise: Fraction = Fraction(0), verifier_coin_bits: int = 0,
                   n: int = 4) -> NizkSpec:
    """Dial NIZK; optional verifier coins reject an accepting pair with probability ``verifier_noise``."""
    m = profile.m
    c_cut = _on_grid(profile.eps_c, m, "eps_c")
    s_cut = c_cut + _on_grid(profile.eps_s, m, "eps_s")
    z_cut = _on_grid(profile.eps_z, profile.ell_z, "eps_z")
    noise = Fraction(verifier_noise)
    if noise and not verifier_coin_bits:
        raise GridError("verifier noise needs verifier coins")
    noise_cut = _on_grid(noise, verifier_coin_bits, "verifier_noise") if verifier_coin_bits else 0
    tag = _tagger(profile.tag_seed, profile.proof_bits)

    def prover(x, w, coins, prefix):
        return tag(x, prefix[0])

    def decide(x, tr) -> bool:
        r, pi = tr
        if dial_member(x):
            return pi == tag(x, r) and r.value >= c_cut
        return c_cut <= r.value < s_cut

    if verifier_coin_bits:
        def verifier(x, tr, sigma):
            return decide(x, tr) and sigma >= noise_cut
    else:
        verifier = decide

    def simulator(x, rho):
        r = BitString(rho[0], m)
        pi = tag(x, r)
        if rho[1] < z_cut:
            pi ^= 1
        return (r, pi)

    label = f"dial-nizk({profile.eps_c},{profile.eps_s},{profile.eps_z};m={m},lz={profile.ell_z}"
    if verifier_coin_bits:
        label += f",noise={noise}/{verifier_coin_bits}b"
    return NizkSpec(
        name=label + ")", n=n, k=1, coin_bits=(m,), message_sizes=(1 << profile.proof_bits,),
        prover_coins=(), sim_coins=(1 << m, 1 << profile.ell_z), membership=dial_member,
        relation=_dial_relation, prover=prover, verifier=verifier, simulator=simulator,
        verifier_coin_bits=verifier_coin_bits, params={"profile": profile, "verifier_noise": noise},
    )


def make_dial_pc(profile: DialProfile, k: int, m_list: tuple[int, ...] | None = None, n: int = 4) -> PublicCoinSpec:
    """k-round dial protocol with 2k messages; the profile's m is the total coin length."""
    if k < 1:
        raise ScheduleError("k must be at least 1")
    if m_list is None:
        base, extra = divmod(profile.m, k)
        m_list = tuple(base + (1 if i < extra else 0) for i in range(k))
    m_list = tuple(m_list)
    if len(m_list) != k or sum(m_list) != profile.m:
        raise ScheduleError(f"m_list {m_list} must have {k} entries summing to m={profile.m}")
    if m_list[0] == 0:
        raise ScheduleError("dial protocols are verifier-first; m_1 must be positive")
    c_cut = _on_grid(profile.eps_c, profile.m, "eps_c")
    s_cut = c_cut + _on_grid(profile.eps_s, profile.m, "eps_s")
    z_cut = _on_grid(profile.eps_z, profile.ell_z, "eps_z")
    tag = _tagger(profile.tag_seed, profile.proof_bits)

    def prover(x, w, coins, prefix):
        i = (len(prefix) + 1) // 2
        return tag("pc", i, x, tuple(prefix[0::2]))

    def verifier(x, tr) -> bool:
        rs = tr[0::2]
        joined = BitString.join(rs).value
        if dial_member(x):
            if joined < c_cut:
                return False
            return all(tr[2 * i + 1] == tag("pc", i + 1, x, tuple(rs[: i + 1])) for i in range(k))
        return c_cut <= joined < s_cut

    def simulator(x, rho):
        tr: tuple = ()
        for i in range(k):
            tr = tr + (BitString(rho[i], m_list[i]),)
            pi = tag("pc", i + 1, x, tuple(tr[0::2]))
            if i == 0 and rho[k] < z_cut:
                pi ^= 1
            tr = tr + (pi,)
        return tr

    return PublicCoinSpec(
        f"dial-pc({profile.eps_c},{profile.eps_s},{profile.eps_z};m={m_list},lz={profile.ell_z})",
        n, k, m_list, (1 << profile.proof_bits,) * k, (),
        tuple(1 << mi for mi in m_list) + (1 << profile.ell_z,),
        dial_member, _dial_relation, prover, verifier, simulator, 0, None,
        {"profile": profile},
    )


# Graphs. Adjacency is stored as a bitmask over vertex pairs (u < v) in
# lexicographic order, so a graph on n vertices is one integer below
# 2^(n(n-1)/2). Permutations are referred to by their lexicographic rank.

@lru_cache(maxsize=None)
def _pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(combinations(range(n), 2))


@lru_cache(maxsize=None)
def _pair_index(n: int) -> dict:
    return {p: i for i, p in enumerate(_pairs(n))}


@lru_cache(maxsize=None)
def perm_table(n: int) -> tuple[tuple[int, ...], ...]:
    if n > MAX_GRAPH_VERTICES:
        raise ValueError(f"at most {MAX_GRAPH_VERTICES} vertices")
    return tuple(permutations(range(n)))


@lru_cache(maxsize=None)
def _perm_rank(n: int) -> dict:
    return {p: i for i, p in enumerate(perm_table(n))}


def perm_rank(perm: tuple[int, ...]) -> int:
    return _perm_rank(len(perm))[tuple(perm)]


@lru_cache(maxsize=1 << 18)
def permute_mask(n: int, mask: int, rank: int) -> int:
    perm = perm_table(n)[rank]
    idx = _pair_index(n)
    out = 0
    for i, (u, v) in enumerate(_pairs(n)):
        if mask >> i & 1:
            a, b = perm[u], perm[v]
            out |= 1 << idx[(a, b) if a < b else (b, a)]
    return out


@dataclass(frozen=True)
class Graph:
    n: int
    mask: int

    def __post_init__(self):
        if not 0 <= self.n <= MAX_GRAPH_VERTICES:
            raise ValueError(f"vertex count must be in [0, {MAX_GRAPH_VERTICES}]")
        if not 0 <= self.mask < (1 << len(_pairs(self.n))):
            raise ValueError("adjacency mask out of range")

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        idx = _pair_index(n)
        mask = 0
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            mask |= 1 << idx[(min(u, v), max(u, v))]
        return cls(n, mask)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(p for i, p in enumerate(_pairs(self.n)) if self.mask >> i & 1)

    def adjacency(self) -> list[list[int]]:
        a = [[0] * self.n for _ in range(self.n)]
        for u, v in self.edges:
            a[u][v] = a[v][u] = 1
        return a

    def permute(self, perm: tuple[int, ...] | int) -> "Graph":
        rank = perm if isinstance(perm, int) else perm_rank(perm)
        return Graph(self.n, permute_mask(self.n, self.mask, rank))

    def canonical(self):
        return (self.n, self.mask)

    def __str__(self) -> str:
        return f"G{self.n}{list(self.edges)}"


def find_isomorphism(g0: Graph, g1: Graph) -> tuple[int, ...] | None:
    """Some permutation phi with g0.permute(phi) == g1, or None."""
    if g0.n != g1.n or bin(g0.mask).count("1") != bin(g1.mask).count("1"):
        return None
    for rank, perm in enumerate(perm_table(g0.n)):
        if permute_mask(g0.n, g0.mask, rank) == g1.mask:
            return perm
    return None


def gi_member(x) -> bool:
    return find_isomorphism(x[0], x[1]) is not None


def _gi_relation(x, w) -> bool:
    g0, g1 = x
    return w is not None and len(w) == g0.n and sorted(w) == list(range(g0.n)) and g0.permute(tuple(w)) == g1


def make_graph_iso(g0: Graph, g1: Graph) -> PublicCoinSpec:
    """Prover-first sigma protocol; the instance is the pair (g0, g1).

    pi_1 is a random relabeling H of g1, r_2 a challenge bit b, pi_2 the
    rank of a permutation taking g_b to H.
    """
    if g0.n != g1.n:
        raise ValueError("graphs must have the same vertex count")
    n = g0.n
    perms = perm_table(n)
    nfact = factorial(n)
    empty = BitString.empty()

    def prover(x, w, coins, prefix):
        sigma = perms[coins[0]]
        if len(prefix) == 1:
            return permute_mask(n, x[1].mask, coins[0])
        if prefix[2].value == 1:
            return coins[0]
        return perm_rank(tuple(sigma[w[v]] for v in range(n)))

    def verifier(x, tr) -> bool:
        b = tr[2].value
        return permute_mask(n, x[b].mask, tr[3]) == tr[1]

    def simulator(x, rho):
        b, tau = rho
        return (empty, permute_mask(n, x[b].mask, tau), BitString(b, 1), tau)

    return PublicCoinSpec(
        f"graph-iso(n={n})", n, 2, (0, 1), (1 << len(_pairs(n)), nfact), (nfact,), (2, nfact),
        gi_member, _gi_relation, prover, verifier, simulator, 0, Fraction(1, 2),
        {"graphs": (g0, g1)},
    )


def parse_graph_pair(text: str) -> tuple[Graph, Graph]:
    """Parse the two-graph edge-list format (see docs/config.md)."""
    graphs: list[Graph] = []
    n: int | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    expect_n = True
    last_line = 0

    def close(line_no: int):
        if n is None:
            raise ParseError("graph has no 'n' line", line_no)
        graphs.append(Graph.from_edges(n, edges))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        last_line = line_no
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "--":
            if len(graphs) >= 1:
                raise ParseError("more than two graphs", line_no)
            close(line_no)
            edges, seen, expect_n = [], set(), True
            continue
        parts = line.split()
        if parts[0] == "n":
            if not expect_n or len(parts) != 2:
                raise ParseError("unexpected 'n' line", line_no)
            try:
                count = int(parts[1])
            except ValueError:
                raise ParseError(f"bad vertex count {parts[1]!r}", line_no) from None
            if not 0 <= count <= MAX_GRAPH_VERTICES:
                raise ParseError(f"vertex count must be in [0, {MAX_GRAPH_VERTICES}]", line_no)
            if graphs and count != graphs[0].n:
                raise ParseError("both graphs must have the same vertex count", line_no)
            n, expect_n = count, False
            continue
        if parts[0] == "e":
            if n is None or expect_n:
                if graphs and n is not None:
                    expect_n = False
                else:
                    raise ParseError("edge before 'n' line", line_no)
            if len(parts) != 3:
                raise ParseError("edge lines are 'e <u> <v>'", line_no)
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError("edge endpoints must be integers", line_no) from None
            if u == v:
                raise ParseError(f"self-loop at vertex {u}", line_no)
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"vertex out of range for n={n}", line_no)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ParseError(f"edge {key} declared twice", line_no)
            seen.add(key)
            edges.append(key)
            continue
        raise ParseError(f"unrecognized line {line!r}", line_no)
    if not graphs:
        raise ParseError("missing '--' separator", last_line)
    close(last_line)
    return graphs[0], graphs[1]


def load_graph_pair(path) -> tuple[Graph, Graph]:
    return parse_graph_pair(Path(path).read_text(encoding="utf-8"))


def data_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name
