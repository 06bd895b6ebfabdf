"""Iterated sumsets in finite abelian groups and escape from unions of cosets.

Elements of ``Z/n_1 x ... x Z/n_s`` are tuples of residues; internally they are
encoded as mixed-radix indices ``0 <= i < |G|`` with ``0`` the identity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from ._parallel import ordered_map
from .characters import discrete_log, is_prime, least_primitive_root
from .core_arith import factorize
from .errors import (
    IdentityViolation,
    InvalidArity,
    InvalidParameter,
    InvalidPrime,
    LimitExceeded,
    MissingIdentity,
    NotProper,
)

MAX_GROUP_ORDER = 10**4


@dataclass(frozen=True)
class FiniteAbelianGroup:
    orders: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))
        if any(n < 1 for n in self.orders):
            raise InvalidParameter("cyclic factor orders must be >= 1")

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @property
    def dimension(self) -> int:
        return sum(factorize(self.order).values()) if self.order > 1 else 0

    @property
    def name(self) -> str:
        return "x".join(f"Z{n}" for n in self.orders) or "Z1"

    @cached_property
    def _radix(self) -> np.ndarray:
        r = np.ones(len(self.orders), dtype=np.int64)
        for i in range(len(self.orders) - 2, -1, -1):
            r[i] = r[i + 1] * self.orders[i + 1]
        return r

    def index(self, elem) -> int:
        if isinstance(elem, (int, np.integer)):
            if not 0 <= elem < self.order:
                raise InvalidParameter(f"index {elem} outside the group")
            return int(elem)
        if len(elem) != len(self.orders):
            raise InvalidParameter(f"element {elem} has wrong length")
        return int(sum((int(e) % n) * int(r) for e, n, r in zip(elem, self.orders, self._radix)))

    def element(self, i: int) -> tuple[int, ...]:
        return tuple(int(i // r % n) for n, r in zip(self.orders, self._radix))

    @cached_property
    def _coords(self) -> np.ndarray:
        i = np.arange(self.order, dtype=np.int64)
        return np.stack([i // r % n for n, r in zip(self.orders, self._radix)], axis=1) if self.orders else i[:, None] * 0

    def _encode(self, coords: np.ndarray) -> np.ndarray:
        mods = np.asarray(self.orders, dtype=np.int64)
        return ((coords % mods) * self._radix).sum(axis=-1) if self.orders else np.zeros(len(coords), dtype=np.int64)

    def add(self, i: int, j: int) -> int:
        return int(self._encode(self._coords[i] + self._coords[j]))

    def neg(self, i: int) -> int:
        return int(self._encode(-self._coords[i]))

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[a, g] = a + g``; built lazily, only for small groups."""
        if self.order > 2048:
            raise LimitExceeded("addition table only for |G| <= 2048")
        c = self._coords
        return self._encode(c[:, None, :] + c[None, :, :])

    def translate(self, members: Iterable[int], a: int) -> frozenset[int]:
        ca = self._coords[a]
        idx = np.fromiter(members, dtype=np.int64)
        return frozenset(self._encode(self._coords[idx] + ca).tolist()) if len(idx) else frozenset()


@dataclass(frozen=True)
class Subgroup:
    group: FiniteAbelianGroup
    members: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.members)

    @property
    def dimension(self) -> int:
        return sum(factorize(self.order).values()) if self.order > 1 else 0

    @property
    def proper(self) -> bool:
        return self.order < self.group.order

    def coset(self, rep: int) -> frozenset[int]:
        return self.group.translate(self.members, rep)


def generated_subgroup(G: FiniteAbelianGroup, gens: Iterable[int]) -> Subgroup:
    members = {0}
    frontier = [0]
    gens = [G.index(g) for g in gens]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = G.add(x, g)
                if y not in members:
                    members.add(y)
                    nxt.append(y)
        frontier = nxt
    return Subgroup(G, tuple(sorted(members)))


def subgroup_enumerate(G: FiniteAbelianGroup) -> list[Subgroup]:
    """All subgroups: cyclic ones first, then closure under joins. Sorted by (order, members)."""
    if G.order > MAX_GROUP_ORDER:
        raise LimitExceeded(f"|G| = {G.order} above {MAX_GROUP_ORDER}")
    found: dict[tuple[int, ...], Subgroup] = {}
    for g in range(G.order):
        s = generated_subgroup(G, [g])
        found.setdefault(s.members, s)
    frontier = list(found.values())
    while frontier:
        new = []
        base = list(found.values())
        for h in frontier:
            for k in base:
                if set(h.members) <= set(k.members) or set(k.members) <= set(h.members):
                    continue
                gens = [m for m in h.members if m] + [m for m in k.members if m]
                j = generated_subgroup(G, _thin_generators(G, gens))
                if j.members not in found:
                    found[j.members] = j
                    new.append(j)
        frontier = new
    return sorted(found.values(), key=lambda s: (s.order, s.members))


def _thin_generators(G: FiniteAbelianGroup, gens: list[int]) -> list[int]:
    keep: list[int] = []
    span = {0}
    for g in gens:
        if g not in span:
            keep.append(g)
            span = set(generated_subgroup(G, keep).members)
    return keep


def sumset_iterate(G: FiniteAbelianGroup, A: Iterable, k: int) -> frozenset[int]:
    """``kA`` as a set of element indices, built as ``(k-1)A + A``."""
    if k < 1:
        raise InvalidArity("k must be >= 1")
    A = sorted({G.index(a) for a in A})
    if not A:
        raise InvalidParameter("A must be nonempty")
    S = frozenset(A)
    for _ in range(k - 1):
        S = frozenset().union(*(G.translate(S, a) for a in A))
    return S


@dataclass(frozen=True)
class ContainedInProperSubgroup:
    subgroup: Subgroup


def _cover_union(cosets: Sequence[tuple[int, Subgroup]]) -> frozenset[int]:
    out: set[int] = set()
    for rep, H in cosets:
        out |= H.coset(rep)
    return frozenset(out)


def escape_k(G: FiniteAbelianGroup, A: Iterable, cosets: Sequence[tuple[object, Subgroup]]):
    """Smallest ``k <= |G|`` with ``kA`` outside the cover, else the proper subgroup ``<A>``."""
    A = sorted({G.index(a) for a in A})
    if 0 not in A:
        raise MissingIdentity("A must contain the identity")
    cover = _cover_union([(G.index(r), H) for r, H in cosets])
    if len(cover) == G.order:
        raise NotProper("the cosets cover the whole group")
    S = frozenset(A)
    for k in range(1, G.order + 1):
        if not S <= cover:
            return k
        S = frozenset().union(*(G.translate(S, a) for a in A))
    span = generated_subgroup(G, A)
    if not span.proper:
        raise IdentityViolation("kA never escaped although A generates G")
    return ContainedInProperSubgroup(span)


@dataclass(frozen=True, eq=False)
class Configuration:
    k: int
    G: FiniteAbelianGroup
    A: frozenset
    cosets: tuple

    def __post_init__(self):
        A = frozenset(self.G.index(a) for a in self.A)
        object.__setattr__(self, "A", A)
        if 0 not in A:
            raise MissingIdentity("A must contain the identity")
        sets = [H.coset(self.G.index(r)) for r, H in self.cosets]
        if len(set(sets)) != len(sets):
            raise InvalidParameter("cosets must be pairwise distinct")
        union = frozenset().union(*sets) if sets else frozenset()
        if len(union) == self.G.order:
            raise NotProper("the cosets cover the whole group")
        if not sumset_iterate(self.G, A, self.k) <= union:
            raise InvalidParameter("kA is not contained in the union of cosets")

    @property
    def complexity(self) -> tuple[int, ...]:
        d = self.G.dimension
        m = [0] * max(d, 1)
        for _, H in self.cosets:
            m[H.dimension] += 1
        return tuple(m)


# ---------------------------------------------------------------------------
# exhaustive and sampled verification


def abelian_groups(order: int) -> list[FiniteAbelianGroup]:
    """One group per isomorphism class, as invariant factors ``n_1 | n_2 | ...``."""
    if order == 1:
        return [FiniteAbelianGroup(())]
    per_prime = []
    for p, e in sorted(factorize(order).items()):
        per_prime.append([(p, part) for part in _partitions(e)])
    out = []
    for combo in itertools.product(*per_prime):
        width = max(len(part) for _, part in combo)
        factors = [1] * width
        for p, part in combo:
            for i, lam in enumerate(sorted(part, reverse=True)):
                factors[width - 1 - i] *= p**lam
        out.append(FiniteAbelianGroup(tuple(factors)))
    return out


def _partitions(n: int, cap: int | None = None) -> list[tuple[int, ...]]:
    cap = n if cap is None else cap
    if n == 0:
        return [()]
    out = []
    for first in range(min(n, cap), 0, -1):
        for rest in _partitions(n - first, first):
            out.append((first,) + rest)
    return out


def proper_cosets(G: FiniteAbelianGroup) -> list[tuple[int, Subgroup, frozenset]]:
    """Every coset of every proper subgroup, once, as (representative, subgroup, members)."""
    out = []
    for H in subgroup_enumerate(G):
        if not H.proper:
            continue
        seen: set[int] = set()
        for r in range(G.order):
            if r in seen:
                continue
            c = H.coset(r)
            seen |= c
            out.append((r, H, c))
    return out


def _covers(G: FiniteAbelianGroup, m: int) -> list[tuple[tuple[int, ...], int]]:
    """All unions of 1..m distinct proper cosets that miss some element: (coset indices, bitmask)."""
    cos = proper_cosets(G)
    masks = [sum(1 << i for i in c) for _, _, c in cos]
    full = (1 << G.order) - 1
    out = []
    for size in range(1, m + 1):
        for idx in itertools.combinations(range(len(cos)), size):
            u = 0
            for i in idx:
                u |= masks[i]
            if u != full:
                out.append((idx, u))
    return out


def _translation_luts(G: FiniteAbelianGroup) -> np.ndarray:
    """``lut[a, j, v]``: the mask of ``(byte j of a mask equal to v) + a``."""
    n = G.order
    nbytes = -(-n // 8)
    table = G.add_table
    lut = np.zeros((n, nbytes, 256), dtype=np.int64)
    v = np.arange(256, dtype=np.int64)
    for a in range(n):
        for j in range(nbytes):
            for bit in range(8):
                g = 8 * j + bit
                if g < n:
                    lut[a, j] |= ((v >> bit) & 1) << int(table[a, g])
    return lut


def _translate(lut: np.ndarray, S: np.ndarray, a: int) -> np.ndarray:
    out = np.zeros_like(S)
    for j in range(lut.shape[1]):
        out |= lut[a, j][(S >> (8 * j)) & 255]
    return out


def _initial_masks(codes: np.ndarray) -> np.ndarray:
    """Mask of ``A = {0} + {e : bit e-1 of code}``."""
    return (np.asarray(codes, dtype=np.int64) << 1) | 1


def _chains(G: FiniteAbelianGroup, codes: np.ndarray) -> np.ndarray:
    """Bitmasks of ``A, 2A, ...`` until stable, for each ``A`` given by its code.

    Bit ``e - 1`` of a code marks the nonzero element ``e``; 0 is always in ``A``.
    Short chains are padded with their final set.
    """
    if G.order > 62:
        raise LimitExceeded("bitmask chains need |G| <= 62")
    lut = _translation_luts(G)
    A = _initial_masks(codes)
    S = A.copy()
    chain = [S]
    for _ in range(G.order - 1):
        nxt = S.copy()
        for a in range(1, G.order):
            on = ((A >> a) & 1).astype(bool)
            if on.any():
                nxt[on] |= _translate(lut, S[on], a)
        S = nxt
        chain.append(S)
        if np.array_equal(chain[-1], chain[-2]):
            break
    return np.stack(chain, axis=1)


def stable_sumset_masks(G: FiniteAbelianGroup, codes: np.ndarray) -> np.ndarray:
    """Bitmask of ``|G| A`` for each ``A`` (coded as in ``_chains``), by repeated doubling.

    With ``0 in A`` the sets ``2^j A`` increase, and ``S + S = 2S``; once a
    doubling step changes nothing the set is ``kA`` for every larger ``k``.
    """
    if G.order > 62:
        raise LimitExceeded("bitmask sumsets need |G| <= 62")
    lut = _translation_luts(G)
    S = _initial_masks(codes)
    while True:
        nxt = S.copy()
        for a in range(1, G.order):
            on = ((S >> a) & 1).astype(bool)
            if on.any():
                nxt[on] |= _translate(lut, S[on], a)
        if np.array_equal(nxt, S):
            return S
        S = nxt


def _submask_codes(u: int, n: int) -> np.ndarray:
    """Codes of every ``A`` with ``0 in A`` and ``A`` inside the set with bitmask ``u``."""
    if not u & 1:
        return np.zeros(0, dtype=np.int64)
    bits = [e - 1 for e in range(1, n) if u >> e & 1]
    idx = np.arange(1 << len(bits), dtype=np.int64)
    codes = np.zeros(len(idx), dtype=np.int64)
    for i, b in enumerate(bits):
        codes |= ((idx >> i) & 1) << b
    return codes


@dataclass(frozen=True)
class ClassRow:
    group: str
    size_A: int
    m: int
    outcome: str
    k: int
    count: int

    def tsv(self) -> str:
        return f"{self.group}\t{self.size_A}\t{self.m}\t{self.outcome}\t{self.k}\t{self.count}"


@dataclass(frozen=True)
class PropositionReport:
    d: int
    m: int
    order_limit: int
    seed: int
    samples: int
    groups: tuple[str, ...]
    instances: int
    violations: int
    max_k: int
    rows: tuple[ClassRow, ...] = field(repr=False)

    def to_tsv(self) -> str:
        head = "group\tsize_A\tm\toutcome\tk\tcount\n"
        return head + "".join(r.tsv() + "\n" for r in self.rows)


def _exhaustive_group(G: FiniteAbelianGroup, m: int):
    n = G.order
    if n > 62:
        raise LimitExceeded("exhaustive enumeration needs |G| <= 62")
    full = (1 << n) - 1
    rows = 1 << (n - 1)
    by_size = np.array([math.comb(n - 1, s - 1) if s else 0 for s in range(n + 1)], dtype=np.int64)
    covers = _covers(G, m)
    subs = [_submask_codes(u, n) for _, u in covers]
    needed = np.unique(np.concatenate(subs)) if subs else np.zeros(0, dtype=np.int64)
    chain_of = _chains(G, needed) if len(needed) else np.zeros((0, 1), dtype=np.int64)
    popcount = np.array([bin(int(c)).count("1") + 1 for c in needed], dtype=np.int64)
    stats: dict[tuple[int, int, str], list[int]] = {}
    instances = violations = max_k = 0

    def bump(key, k, count):
        cur = stats.setdefault(key, [0, 0])
        cur[0] = max(cur[0], k)
        cur[1] += count

    for (idx, u), codes in zip(covers, subs):
        mm = len(idx)
        instances += rows
        pos = np.searchsorted(needed, codes)
        masks = chain_of[pos]
        sizes = popcount[pos]
        inside_counts = np.bincount(sizes, minlength=n + 1)
        for s in range(1, n + 1):
            c1 = int(by_size[s] - inside_counts[s])
            if c1:
                bump((s, mm, "escape"), 1, c1)
        if len(codes):
            max_k = max(max_k, 1) if len(codes) < rows else max_k
            outside = (masks & ~np.int64(u)) != 0
            esc = outside.any(axis=1)
            kk = np.where(esc, outside.argmax(axis=1) + 1, 0)
            violations += int(np.count_nonzero(~esc & (masks[:, -1] == full)))
            for s in np.unique(sizes).tolist():
                sel = sizes == s
                e_sel = esc & sel
                if e_sel.any():
                    k_top = int(kk[e_sel].max())
                    max_k = max(max_k, k_top)
                    bump((s, mm, "escape"), k_top, int(e_sel.sum()))
                if (~esc & sel).any():
                    bump((s, mm, "proper"), 0, int((~esc & sel).sum()))
        else:
            max_k = max(max_k, 1)
    rows_out = [ClassRow(G.name, s, mm, out, v[0], v[1]) for (s, mm, out), v in sorted(stats.items())]
    return rows_out, instances, violations, max_k


def verify_proposition(
    d: int, m: int, order_limit: int, *, seed: int = 0, samples: int = 1000, exhaustive_limit: int = 20, threads: int = 1
) -> PropositionReport:
    """Check the escape-or-proper-subgroup dichotomy over small groups.

    Groups of dimension ``<= d`` and order ``<= exhaustive_limit`` are checked
    for every ``A`` and every cover by ``<= m`` proper cosets; larger orders up
    to ``order_limit`` get ``samples`` seeded random instances.
    """
    if d > 3 or m > 3 or order_limit > 60:
        raise LimitExceeded("caps are d <= 3, m <= 3, order_limit <= 60")
    if d < 1 or m < 1 or order_limit < 2:
        raise InvalidParameter("need d >= 1, m >= 1, order_limit >= 2")
    groups = [
        G
        for n in range(2, order_limit + 1)
        if sum(factorize(n).values()) <= d
        for G in abelian_groups(n)
    ]
    small = [G for G in groups if G.order <= exhaustive_limit]
    large = [G for G in groups if G.order > exhaustive_limit]
    parts = ordered_map(lambda G: _exhaustive_group(G, m), small, threads)
    rows: list[ClassRow] = []
    instances = violations = max_k = 0
    for r, i, v, k in parts:
        rows += r
        instances += i
        violations += v
        max_k = max(max_k, k)
    if large and samples:
        r, i, v, k = _sampled(large, m, seed, samples)
        rows += r
        instances += i
        violations += v
        max_k = max(max_k, k)
    names = tuple(G.name for G in groups)
    return PropositionReport(d, m, order_limit, seed, samples, names, instances, violations, max_k, tuple(rows))


def _sampled(groups: list[FiniteAbelianGroup], m: int, seed: int, samples: int):
    rng = np.random.default_rng(seed)
    cos_cache: dict[tuple[int, ...], list] = {}
    stats: dict[tuple[str, int, int, str], list[int]] = {}
    violations = max_k = 0
    done = 0
    while done < samples:
        G = groups[int(rng.integers(len(groups)))]
        cos = cos_cache.setdefault(G.orders, proper_cosets(G))
        pick = rng.random(G.order) < 0.5
        pick[0] = True
        A = np.nonzero(pick)[0].tolist()
        mm = int(rng.integers(1, m + 1))
        chosen = sorted(rng.choice(len(cos), size=min(mm, len(cos)), replace=False).tolist())
        union = frozenset().union(*(cos[i][2] for i in chosen))
        if len(union) == G.order:
            continue
        done += 1
        res = escape_k(G, A, [(cos[i][0], cos[i][1]) for i in chosen])
        if isinstance(res, int):
            key = (G.name, len(A), len(chosen), "escape")
            max_k = max(max_k, res)
        else:
            key = (G.name, len(A), len(chosen), "proper")
            if len(generated_subgroup(G, A).members) == G.order or not sumset_iterate(G, A, G.order) <= union:
                violations += 1
            res = 0
        cur = stats.setdefault(key, [0, 0])
        cur[0] = max(cur[0], res)
        cur[1] += 1
    rows = [ClassRow(g, s, mm, out, v[0], v[1]) for (g, s, mm, out), v in sorted(stats.items(), key=lambda kv: (_order_of(kv[0][0]), kv[0]))]
    return rows, samples, violations, max_k


def _order_of(name: str) -> int:
    return math.prod(int(p[1:]) for p in name.split("x"))


# ---------------------------------------------------------------------------
# primitive roots


@dataclass(frozen=True)
class PrimrootEscape:
    p: int
    bound: int
    k: int
    generator: int
    logs: tuple[int, ...]
    escape_k: int | None
    direct_k: int | None
    witness: tuple[int, ...] | None

    @property
    def escapes(self) -> bool:
        return self.escape_k is not None

    @property
    def agree(self) -> bool:
        return self.escape_k == self.direct_k


def _is_primitive_root(r: int, p: int, primes: Sequence[int]) -> bool:
    return r % p != 0 and all(pow(r, (p - 1) // l, p) != 1 for l in primes)


def primroot_escape(p: int, bound: int, k: int) -> PrimrootEscape:
    """Does a product of at most ``k`` integers in ``[1, bound]`` give a primitive root mod ``p``?

    Group side: ``A = {log n}`` in ``Z/(p-1)`` and the cover by the subgroups
    ``{x : r x = 0}`` with ``r | p-1``, ``r < p-1``; ``kA`` escapes exactly when
    it meets the generators. Direct side: multiply residues and test orders.
    """
    if p == 2 or not is_prime(p):
        raise InvalidPrime(f"{p} is not an odd prime")
    if p > 10**6:
        raise LimitExceeded("p must be <= 10^6")
    if bound < 2:
        raise InvalidParameter("bound must be >= 2")
    if k < 1:
        raise InvalidArity("k must be >= 1")
    g = least_primitive_root(p)
    n = p - 1
    ell = sorted(factorize(n))
    base = [b for b in range(1, bound + 1) if b % p]
    logs = sorted({discrete_log(b % p, g, p, n) for b in base})
    # group side
    unit = np.ones(n, dtype=bool)
    for l in ell:
        unit[::l] = False
    S = np.zeros(n, dtype=bool)
    S[0] = True
    esc = None
    for j in range(1, k + 1):
        S = np.logical_or.reduce([np.roll(S, a) for a in logs])
        if (S & unit).any():
            esc = j
            break
    # direct side
    reach = {1: ()}
    direct = witness = None
    for j in range(1, k + 1):
        nxt: dict[int, tuple[int, ...]] = {}
        for r, path in reach.items():
            for b in base:
                nxt.setdefault(r * b % p, path + (b,))
        reach = nxt
        hits = sorted(r for r in reach if _is_primitive_root(r, p, ell))
        if hits:
            direct, witness = j, reach[hits[0]]
            break
    return PrimrootEscape(p, bound, k, g, tuple(logs), esc, direct, witness)
