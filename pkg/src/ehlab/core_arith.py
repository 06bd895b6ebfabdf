"""Sieve tables, finite-support sequences and Dirichlet convolution.

The sieve stores flat arrays indexed by ``n``. Memory is roughly
``limit * 26`` bytes (int32 spf, int8 mobius, int64 totient, float64 Lambda,
plus lazily built exponent/cofactor tables), so the default cap of 1e8 costs
about 2.6 GB; desk-scale runs stay at or below 1e7.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Integral, Rational
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidArity, InvalidLimit, InvalidParameter, LimitExceeded, ModeMismatch

MAX_SIEVE_LIMIT = 10**8


@dataclass(frozen=True, eq=False)
class SieveTables:
    """Smallest prime factor, Mobius, Euler phi and von Mangoldt up to ``limit``.

    Index ``n`` of each array holds the value at ``n``; index 0 is unused.
    """

    limit: int
    spf: np.ndarray
    mobius: np.ndarray
    totient: np.ndarray
    mangoldt: np.ndarray

    @cached_property
    def primes(self) -> np.ndarray:
        n = np.arange(self.limit + 1)
        return np.nonzero((self.spf == n) & (n >= 2))[0]

    @cached_property
    def _exp_cofactor(self) -> tuple[np.ndarray, np.ndarray]:
        # pexp[n] = v_p(n) for p = spf(n); cof[n] = n / p^v_p(n)
        pexp = np.zeros(self.limit + 1, dtype=np.int8)
        cof = np.ones(self.limit + 1, dtype=np.int64)
        for lo, hi in _doubling_blocks(self.limit):
            n = np.arange(lo, hi)
            p = self.spf[lo:hi].astype(np.int64)
            m = n // p
            same = self.spf[m] == p
            pexp[lo:hi] = np.where(same, pexp[m] + 1, 1)
            cof[lo:hi] = np.where(same, cof[m], m)
        return _readonly(pexp), _readonly(cof)

    @property
    def spf_exponent(self) -> np.ndarray:
        return self._exp_cofactor[0]

    @property
    def spf_cofactor(self) -> np.ndarray:
        return self._exp_cofactor[1]

    def require(self, n: int, what: str = "argument") -> None:
        if n > self.limit:
            raise LimitExceeded(f"{what} {n} exceeds sieve limit {self.limit}")

    def factorize(self, n: int) -> dict[int, int]:
        if n < 1:
            raise InvalidParameter("factorize needs n >= 1")
        self.require(n)
        out: dict[int, int] = {}
        while n > 1:
            p = int(self.spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
        return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _doubling_blocks(limit: int):
    lo = 2
    while lo <= limit:
        hi = min(2 * lo, limit + 1)
        yield lo, hi
        lo = hi


def build_sieve(limit: int, *, max_limit: int = MAX_SIEVE_LIMIT) -> SieveTables:
    """Build :class:`SieveTables` for ``2 <= n <= limit``.

    Every quantity except spf is filled in by doubling blocks: for ``n`` in
    ``[L, 2L)`` the cofactor ``n / spf(n)`` lies below ``L``, so each block is a
    handful of vectorised gathers.
    """
    if limit < 2:
        raise InvalidLimit(f"sieve limit must be >= 2, got {limit}")
    if limit > max_limit:
        raise LimitExceeded(f"sieve limit {limit} above cap {max_limit}")
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.arange(limit + 1, dtype=np.int32)
    unset = spf == 0
    spf[unset] = idx[unset]
    spf[0] = 0
    spf[1] = 1

    mobius = np.zeros(limit + 1, dtype=np.int8)
    totient = np.zeros(limit + 1, dtype=np.int64)
    mangoldt = np.zeros(limit + 1, dtype=np.float64)
    prime_power = np.zeros(limit + 1, dtype=bool)
    mobius[1] = 1
    totient[1] = 1
    for lo, hi in _doubling_blocks(limit):
        n = np.arange(lo, hi, dtype=np.int64)
        p = spf[lo:hi].astype(np.int64)
        m = n // p
        repeated = spf[m] == p
        mobius[lo:hi] = np.where(repeated, 0, -mobius[m])
        totient[lo:hi] = totient[m] * np.where(repeated, p, p - 1)
        pp = (m == 1) | (repeated & prime_power[m])
        prime_power[lo:hi] = pp
        mangoldt[lo:hi] = np.where(pp, np.log(p), 0.0)
    return SieveTables(
        limit=limit,
        spf=_readonly(spf),
        mobius=_readonly(mobius),
        totient=_readonly(totient),
        mangoldt=_readonly(mangoldt),
    )


_default_lock = threading.Lock()
_default: SieveTables | None = None


def default_sieve(limit: int) -> SieveTables:
    """Shared sieve covering at least ``limit``; rebuilt (doubled) on demand."""
    global _default
    with _default_lock:
        if _default is None or _default.limit < limit:
            size = max(limit, 10**5)
            if _default is not None:
                size = max(size, min(2 * _default.limit, MAX_SIEVE_LIMIT))
            _default = build_sieve(size)
        return _default


def resolve_sieve(sieve: SieveTables | None, need: int, what: str = "argument") -> SieveTables:
    """Use ``sieve`` if given (raising LimitExceeded when too small), else the shared one."""
    if sieve is None:
        return default_sieve(max(need, 2))
    sieve.require(need, what)
    return sieve


def multiplicative_table(
    sieve: SieveTables,
    limit: int,
    prime_power: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dtype=np.int64,
) -> np.ndarray:
    """Values of the multiplicative function with ``f(p^e) = prime_power(p, e)``.

    ``prime_power`` receives arrays of primes and exponents. Index 0 is 0.
    """
    sieve.require(limit)
    out = np.zeros(limit + 1, dtype=dtype)
    out[1] = 1
    pexp = sieve.spf_exponent
    cof = sieve.spf_cofactor
    for lo, hi in _doubling_blocks(limit):
        p = sieve.spf[lo:hi].astype(np.int64)
        out[lo:hi] = out[cof[lo:hi]] * prime_power(p, pexp[lo:hi].astype(np.int64))
    return out


def factorize(n: int, sieve: SieveTables | None = None) -> dict[int, int]:
    """Prime factorisation; spf division when a covering sieve is given, else trial division."""
    if n < 1:
        raise InvalidParameter("factorize needs n >= 1")
    if sieve is not None and n <= sieve.limit:
        return sieve.factorize(n)
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_rough(n: int, z: float, sieve: SieveTables | None = None) -> bool:
    """True iff no prime ``p <= z`` divides ``n`` (vacuously true for ``n = 1``)."""
    if n < 1:
        raise InvalidParameter("is_rough needs n >= 1")
    if n == 1:
        return True
    return min(factorize(n, sieve)) > z


def tau_k(k: int, n: int, sieve: SieveTables | None = None) -> int:
    """Number of ordered k-tuples of naturals with product ``n``."""
    if k < 1:
        raise InvalidArity(f"tau_k needs k >= 1, got {k}")
    if n < 1:
        raise InvalidParameter("tau_k needs n >= 1")
    out = 1
    for e in factorize(n, sieve).values():
        out *= math.comb(e + k - 1, k - 1)
    return out


def tau_k_table(k: int, limit: int, sieve: SieveTables | None = None) -> np.ndarray:
    """``tau_k(n)`` for ``0 <= n <= limit`` (index 0 is 0), int64."""
    if k < 1:
        raise InvalidArity(f"tau_k needs k >= 1, got {k}")
    sieve = resolve_sieve(sieve, limit)
    max_e = max(1, int(math.log2(max(limit, 2))) + 1)
    binom = np.array([math.comb(e + k - 1, k - 1) for e in range(max_e + 1)], dtype=np.int64)
    return multiplicative_table(sieve, limit, lambda p, e: binom[e])


# ---------------------------------------------------------------------------
# finite-support sequences


@dataclass(frozen=True, eq=False)
class ArithSeq:
    """Finite-support sequence on ``[lo, hi]``.

    ``values[i]`` is the value at ``lo + i``. Integer and object (Fraction)
    arrays are exact mode; float and complex arrays are floating mode.
    """

    lo: int
    hi: int
    values: np.ndarray

    def __post_init__(self):
        if not (self.hi >= self.lo >= 1):
            raise InvalidParameter(f"support must satisfy hi >= lo >= 1, got [{self.lo}, {self.hi}]")
        if self.values.shape != (self.hi - self.lo + 1,):
            raise InvalidParameter("values length does not match support")

    @property
    def exact(self) -> bool:
        return self.values.dtype.kind in "iuO"

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "float"

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def __call__(self, n: int):
        if self.lo <= n <= self.hi:
            return self.values[n - self.lo]
        return 0

    def at(self, n: np.ndarray) -> np.ndarray:
        """Vectorised evaluation, zero outside the support."""
        n = np.asarray(n, dtype=np.int64)
        inside = (n >= self.lo) & (n <= self.hi)
        out = np.zeros(n.shape, dtype=self.values.dtype)
        out[inside] = self.values[n[inside] - self.lo]
        return out

    def total(self):
        """Sum of all values: exact in exact mode, compensated otherwise."""
        return exact_or_fsum(self.values)

    def nonzero(self) -> np.ndarray:
        return self.lo + np.nonzero(self.values != 0)[0]

    def dense(self, hi: int | None = None) -> np.ndarray:
        """Array indexed directly by ``n`` on ``[0, hi]``."""
        hi = self.hi if hi is None else hi
        out = np.zeros(hi + 1, dtype=self.values.dtype)
        top = min(hi, self.hi)
        if top >= self.lo:
            out[self.lo : top + 1] = self.values[: top - self.lo + 1]
        return out

    # constructors

    @classmethod
    def from_function(cls, lo: int, hi: int, fn: Callable[[int], object], dtype=None) -> "ArithSeq":
        vals = [fn(n) for n in range(lo, hi + 1)]
        if dtype is None:
            dtype = object if any(isinstance(v, Fraction) for v in vals) else None
        return cls(lo, hi, np.array(vals, dtype=dtype))

    @classmethod
    def from_values(cls, lo: int, values: Iterable) -> "ArithSeq":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
        return cls(lo, lo + len(arr) - 1, arr)

    @classmethod
    def indicator(cls, lo: int, hi: int) -> "ArithSeq":
        return cls(lo, hi, np.ones(hi - lo + 1, dtype=np.int64))

    @classmethod
    def ones(cls, hi: int) -> "ArithSeq":
        return cls.indicator(1, hi)

    @classmethod
    def delta(cls) -> "ArithSeq":
        return cls(1, 1, np.ones(1, dtype=np.int64))

    @classmethod
    def mobius(cls, hi: int, sieve: SieveTables | None = None) -> "ArithSeq":
        sieve = resolve_sieve(sieve, hi)
        return cls(1, hi, sieve.mobius[1 : hi + 1].astype(np.int64))

    @classmethod
    def mangoldt(cls, hi: int, sieve: SieveTables | None = None) -> "ArithSeq":
        """``Lambda * 1_[1, hi]``; always floating mode."""
        sieve = resolve_sieve(sieve, hi)
        return cls(1, hi, sieve.mangoldt[1 : hi + 1].copy())


def exact_or_fsum(values: np.ndarray):
    kind = values.dtype.kind
    if kind in "iu":
        return int(values.sum(dtype=object)) if values.size else 0
    if kind == "O":
        return sum(values.tolist(), Fraction(0)) if values.size else 0
    if kind == "c":
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def dirichlet_convolve(f: ArithSeq, g: ArithSeq, *, lo: int | None = None, hi: int | None = None) -> ArithSeq:
    """``(f*g)(n) = sum_{d | n} f(d) g(n/d)``, optionally restricted to ``[lo, hi]``.

    Direct summation over pairs ``(d, m)`` with ``d*m`` in range, iterating the
    sequence with fewer non-zero terms and adding strided slices of the other.
    """
    if f.exact != g.exact:
        raise ModeMismatch(f"cannot convolve {f.mode} with {g.mode} sequence")
    out_lo = f.lo * g.lo if lo is None else max(lo, f.lo * g.lo)
    out_hi = f.hi * g.hi if hi is None else min(hi, f.hi * g.hi)
    if out_hi < out_lo:
        raise InvalidParameter(f"empty output range [{out_lo}, {out_hi}]")
    dtype = np.result_type(f.values.dtype, g.values.dtype)
    out = np.zeros(out_hi - out_lo + 1, dtype=dtype)
    outer, inner = (f, g) if np.count_nonzero(f.values) <= np.count_nonzero(g.values) else (g, f)
    for d in outer.nonzero().tolist():
        v = outer.values[d - outer.lo]
        m_lo = max(inner.lo, -(-out_lo // d))
        m_hi = min(inner.hi, out_hi // d)
        if m_hi < m_lo:
            continue
        start = d * m_lo - out_lo
        out[start : d * m_hi - out_lo + 1 : d] += v * inner.values[m_lo - inner.lo : m_hi - inner.lo + 1]
    return ArithSeq(out_lo, out_hi, out)


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (Integral, np.integer)):
        return Fraction(int(v))
    if isinstance(v, Rational):
        return Fraction(v.numerator, v.denominator)
    raise ModeMismatch(f"value {v!r} is not exact")
