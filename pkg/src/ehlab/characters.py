"""Dirichlet characters stored as exact exponent tables.

A character of order ``d`` is kept as ``e(n) in {0, ..., d-1}`` with
``chi(n) = exp(2 pi i e(n) / d)``; residues sharing a factor with the modulus
carry ``-1`` (``chi(n) = 0``). Complex values are produced only when summing.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._parallel import chunk_ranges, ordered_map
from .core_arith import SieveTables, factorize, resolve_sieve
from .errors import (
    InvalidModulus,
    InvalidParameter,
    InvalidPrime,
    NoSuchElement,
    OutOfRange,
    WrongKind,
)

QUADRATIC = "quadratic"
PRIME_GENERAL = "prime_modulus_general"

# Miller-Rabin witnesses deterministic below 3.3e24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _require_odd_prime(p: int) -> None:
    if p % 2 == 0 or not is_prime(p):
        raise InvalidPrime(f"{p} is not an odd prime")


def jacobi(n: int, q: int) -> int:
    """Jacobi symbol ``(n/q)`` for odd ``q >= 3``."""
    if q < 3 or q % 2 == 0:
        raise InvalidModulus(f"Jacobi symbol needs odd q >= 3, got {q}")
    n %= q
    sign = 1
    while n:
        while n % 2 == 0:
            n //= 2
            if q % 8 in (3, 5):
                sign = -sign
        n, q = q, n
        if n % 4 == 3 and q % 4 == 3:
            sign = -sign
        n %= q
    return sign if q == 1 else 0


def least_nonresidue(p: int) -> int:
    """Least ``n >= 2`` with ``(n/p) = -1``."""
    _require_odd_prime(p)
    n = 2
    while jacobi(n, p) != -1:
        n += 1
    return n


def least_primitive_root(p: int, sieve: SieveTables | None = None) -> int:
    """Least generator of ``(Z/pZ)^x``, checked by ``g^((p-1)/r) != 1`` for primes ``r | p-1``."""
    _require_odd_prime(p)
    if sieve is not None:
        sieve.require(p, "prime")
    cofactors = [(p - 1) // r for r in factorize(p - 1, sieve)]
    g = 1
    while True:
        g += 1
        if all(pow(g, c, p) != 1 for c in cofactors):
            return g


@lru_cache(maxsize=64)
def _baby_steps(g: int, p: int, m: int) -> dict[int, int]:
    table: dict[int, int] = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * g % p
    return table


def discrete_log(h: int, g: int, p: int, order: int | None = None) -> int:
    """Least ``x >= 0`` with ``g^x = h (mod p)``, by baby-step giant-step.

    Baby-step tables are cached per ``(g, p)``, so repeated logs to one base
    cost ``O(sqrt(p))`` each after the first.
    """
    order = p - 1 if order is None else order
    m = math.isqrt(order) + 1
    table = _baby_steps(g, p, m)
    factor = pow(g, -m, p)
    cur = h % p
    for i in range(m + 1):
        j = table.get(cur)
        if j is not None:
            return i * m + j
        cur = cur * factor % p
    raise NoSuchElement(f"{h} is not a power of {g} mod {p}")


@lru_cache(maxsize=32)
def _log_table(p: int, g: int) -> np.ndarray:
    log = np.full(p, -1, dtype=np.int64)
    cur = 1
    for k in range(p - 1):
        log[cur] = k
        cur = cur * g % p
    log.flags.writeable = False
    return log


def _legendre_table(p: int) -> np.ndarray:
    sq = np.zeros(p, dtype=bool)
    r = np.arange(1, p, dtype=np.int64)
    sq[(r * r) % p] = True
    leg = np.where(sq, 1, -1).astype(np.int8)
    leg[0] = 0
    return leg


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """Character mod ``modulus`` given by its exponent table over residues."""

    modulus: int
    kind: str
    order: int
    generator: int | None
    table: np.ndarray

    @classmethod
    def quadratic(cls, q: int) -> "DirichletCharacter":
        """The Jacobi symbol ``n -> (n/q)`` for odd ``q >= 3``."""
        if q < 3 or q % 2 == 0:
            raise InvalidModulus(f"quadratic character needs odd q >= 3, got {q}")
        sign = np.ones(q, dtype=np.int8)
        residues = np.arange(q)
        for p, e in factorize(q).items():
            leg = _legendre_table(p)[residues % p]
            sign *= leg**e
        table = np.where(sign == 1, 0, np.where(sign == -1, 1, -1)).astype(np.int64)
        table.flags.writeable = False
        order = 2 if np.any(table == 1) else 1
        return cls(q, QUADRATIC, order, None, table)

    @classmethod
    def prime_general(cls, p: int, order: int, generator: int | None = None) -> "DirichletCharacter":
        """Character mod prime ``p`` with ``chi(g) = exp(2 pi i / order)``."""
        _require_odd_prime(p)
        if order < 1 or (p - 1) % order:
            raise InvalidParameter(f"order {order} does not divide {p - 1}")
        g = least_primitive_root(p) if generator is None else generator
        table = _log_table(p, g) % order
        table = np.where(np.arange(p) % p == 0, -1, table)
        table.flags.writeable = False
        return cls(p, PRIME_GENERAL, order, g, table)

    @property
    def is_quadratic(self) -> bool:
        return self.kind == QUADRATIC

    @property
    def is_principal(self) -> bool:
        return self.order == 1

    @property
    def is_real(self) -> bool:
        return self.order <= 2

    def exponent(self, n: int) -> int | None:
        e = int(self.table[n % self.modulus])
        return None if e < 0 else e

    def exponents(self, n) -> np.ndarray:
        return self.table[np.asarray(n, dtype=np.int64) % self.modulus]

    def roots(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.order) / self.order)

    def values(self, n) -> np.ndarray:
        """``chi(n)`` for an array: int64 for real characters, complex128 otherwise."""
        e = self.exponents(n)
        if self.is_real:
            return np.where(e < 0, 0, 1 - 2 * e).astype(np.int64)
        return np.where(e < 0, 0, self.roots()[np.maximum(e, 0)])

    def value(self, n: int):
        e = self.exponent(n)
        if e is None:
            return 0
        if self.is_real:
            return 1 - 2 * e
        return cmath.exp(2j * math.pi * e / self.order)

    def conj_values(self, n) -> np.ndarray:
        v = self.values(n)
        return v if self.is_real else np.conj(v)


def least_nonone(chi: DirichletCharacter) -> int:
    """Least ``n`` with ``chi(n) != 1`` (zero values count)."""
    if chi.is_principal:
        raise NoSuchElement("principal character has no n with chi(n) != 1 among units")
    hits = np.nonzero(chi.table[1:] != 0)[0]
    return int(hits[0]) + 1


def exponent_counts(chi: DirichletCharacter, lo: int, hi: int) -> tuple[np.ndarray, int]:
    """Histogram of exponents over ``[lo, hi]`` and the number of zero values."""
    q = chi.modulus
    length = hi - lo + 1
    full, rem = divmod(length, q)
    tab = chi.table
    period = np.bincount(tab[tab >= 0], minlength=chi.order)
    counts = full * period
    zeros = full * int(np.count_nonzero(tab < 0))
    if rem:
        tail = chi.exponents(np.arange(lo, lo + rem, dtype=np.int64))
        counts = counts + np.bincount(tail[tail >= 0], minlength=chi.order)
        zeros += int(np.count_nonzero(tail < 0))
    return counts, zeros


def char_sum(chi: DirichletCharacter, lo: int, hi: int):
    """``sum_{lo <= n <= hi} chi(n)``; an exact int for real characters."""
    if lo > hi:
        raise InvalidParameter(f"char_sum needs lo <= hi, got [{lo}, {hi}]")
    counts, _ = exponent_counts(chi, lo, hi)
    if chi.is_real:
        return int(counts[0]) - (int(counts[1]) if chi.order == 2 else 0)
    roots = chi.roots()
    return complex(math.fsum(counts * roots.real), math.fsum(counts * roots.imag))


@dataclass(frozen=True, eq=False)
class CharSumProfile:
    """Partial sums ``S(t) = sum_{n <= t} chi(n)`` for ``0 <= t <= T``."""

    q: int
    partial: np.ndarray

    @property
    def T(self) -> int:
        return len(self.partial) - 1

    def S(self, t: int):
        return self.partial[t]

    def block_sum(self, lo: int, hi: int):
        """Sum over ``lo <= n <= hi`` (zero if empty)."""
        lo = max(lo, 1)
        if hi < lo:
            return 0
        return self.partial[hi] - self.partial[lo - 1]


def char_sum_profile(chi: DirichletCharacter, T: int) -> CharSumProfile:
    vals = chi.values(np.arange(T + 1))
    vals[0] = 0
    return CharSumProfile(chi.modulus, np.cumsum(vals))


def dyadic_blocks(X: int) -> list[tuple[int, int, int]]:
    """Blocks ``(N, lo, hi)`` with ``N = X, X//2, ...`` and ``n in (N//2, N]``, clipped to ``n < X``.

    Consecutive blocks telescope, so together they partition ``[1, X)``.
    """
    out = []
    N = X
    while N >= 1:
        out.append((N, N // 2 + 1, min(N, X - 1)))
        N //= 2
    return out


def dyadic_max_block(profile: CharSumProfile, X: int) -> tuple[int, float]:
    """Dyadic scale ``N`` maximising ``|sum_{N/2 < n <= N, n < X} chi(n)|``.

    Ties go to the largest ``N``. Since the blocks partition ``[1, X)``, the
    returned magnitude is at least ``|S(X-1)|`` divided by the block count.
    """
    if X < 2:
        raise InvalidParameter("dyadic_max_block needs X >= 2")
    if X - 1 > profile.T:
        raise InvalidParameter(f"profile only covers t <= {profile.T}")
    best_N, best = X, -1.0
    for N, lo, hi in dyadic_blocks(X):
        mag = abs(profile.block_sum(lo, hi))
        if mag > best:
            best_N, best = N, float(mag)
    return best_N, best


def vinogradov_exponent(varpi: float) -> float:
    """``(1/sqrt(e)) * (1/2 - 2*varpi)``, the exponent a Type II level ``varpi`` yields."""
    if not 0 <= varpi <= 0.25:
        raise OutOfRange(f"varpi must lie in [0, 1/4], got {varpi}")
    return (0.5 - 2 * varpi) / math.sqrt(math.e)


@dataclass(frozen=True)
class MertensReport:
    x: int
    least_nonone: int
    checked: int
    violations: int
    first_violation: int | None
    strict_violations: int
    lhs: int
    rhs: float

    @property
    def pointwise_ok(self) -> bool:
        return self.violations == 0

    @property
    def sum_ok(self) -> bool:
        return self.lhs >= self.rhs


def mertens_inequality_check(chi: DirichletCharacter, x: int, sieve: SieveTables | None = None) -> MertensReport:
    """Check ``chi(n) >= 1 - 2 #{p | n : p >= y}`` on ``[1, x]`` and the summed form.

    ``y`` is the least ``n`` with ``chi(n) != 1``. Every prime below ``y`` has
    ``chi(p) = 1``, so only primes ``p >= y`` can flip the sign; ``y`` itself
    must be counted. ``strict_violations`` counts failures of the variant that
    only counts ``p > y``, which fails at ``n = y``.
    """
    if not chi.is_quadratic:
        raise WrongKind("mertens_inequality_check needs a quadratic character")
    sieve = resolve_sieve(sieve, x, "x")
    y = least_nonone(chi)
    n = np.arange(x + 1)
    big = np.zeros(x + 1, dtype=np.int64)
    primes = sieve.primes[(sieve.primes >= y) & (sieve.primes <= x)]
    for p in primes.tolist():
        big[p::p] += 1
    chi_n = chi.values(n)
    ok = chi_n[1:] >= 1 - 2 * big[1:]
    bad = np.nonzero(~ok)[0]
    strict_big = big.copy()
    if y <= x and sieve.spf[y] == y:
        strict_big[y::y] -= 1
    strict_bad = int(np.count_nonzero(chi_n[1:] < 1 - 2 * strict_big[1:]))
    lhs = int(chi_n[1:x].sum())
    rhs = x - 1 - 2 * math.fsum(x / p + 1 for p in primes.tolist())
    return MertensReport(
        x=x,
        least_nonone=y,
        checked=x,
        violations=len(bad),
        first_violation=int(bad[0]) + 1 if len(bad) else None,
        strict_violations=strict_bad,
        lhs=lhs,
        rhs=rhs,
    )


def nonresidue_scan(limit: int, threads: int = 1, sieve: SieveTables | None = None) -> list[tuple[int, int]]:
    """``(p, n(p))`` for all odd primes ``p <= limit``, in ascending order."""
    sieve = resolve_sieve(sieve, limit, "limit")
    primes = sieve.primes[(sieve.primes >= 3) & (sieve.primes <= limit)].tolist()

    def work(span):
        lo, hi = span
        return [(p, least_nonresidue(p)) for p in primes[lo : hi + 1]]

    chunks = ordered_map(work, chunk_ranges(0, len(primes) - 1, max(threads, 1) * 4), threads)
    return [row for chunk in chunks for row in chunk]
