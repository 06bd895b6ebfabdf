"""Finite identities behind the reduction from Elliott-Halberstam to nonresidue bounds.

``chi = 1 * f`` with ``f`` multiplicative, ``f(p^j) = chi(p)^(j-1) (chi(p) - 1)``.
Writing ``f = delta + f_tilde``, ``f_tilde`` vanishes below ``y = n_chi`` (the
least ``n`` with ``chi(n) != 1``), so ``chi = 1 + 1 * f_tilde`` with the
divisor variable of the convolution at most ``n / y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_arith import ArithSeq, SieveTables, dirichlet_convolve, exact_or_fsum, multiplicative_table, resolve_sieve
from .errors import IdentityViolation, InvalidParameter, NoSuchElement, ShiftTooLarge


@dataclass(frozen=True, eq=False)
class ChiMobiusExpansion:
    chi: object
    limit: int
    f: ArithSeq
    f_tilde: ArithSeq
    y: int

    @property
    def exact(self) -> bool:
        return self.f.exact


def _is_real(chi) -> bool:
    return getattr(chi, "is_real", True)


def expand_chi(chi, limit: int, *, sieve: SieveTables | None = None, allow_trivial: bool = False) -> ChiMobiusExpansion:
    """Build ``f = chi * mu`` from its prime-power formula and check ``1 * f = chi``.

    ``chi`` needs ``values(n_array)`` and ``modulus``; a test double works. With
    ``allow_trivial`` a character equal to 1 on all of ``[1, limit]`` gets
    ``y = limit + 1`` instead of raising.
    """
    if limit < 1:
        raise InvalidParameter("limit must be >= 1")
    sieve = resolve_sieve(sieve, max(limit, 2), "limit")
    real = _is_real(chi)
    dtype = np.int64 if real else np.complex128
    chi_n = np.asarray(chi.values(np.arange(1, limit + 1, dtype=np.int64))).astype(dtype)
    off = np.nonzero(chi_n != 1)[0]
    if len(off) == 0 or getattr(chi, "is_principal", False):
        if not allow_trivial:
            raise NoSuchElement("chi is identically 1 on the range; y is undefined")
        y = limit + 1
    else:
        y = int(off[0]) + 1

    def prime_power(p: np.ndarray, e: np.ndarray) -> np.ndarray:
        cp = np.asarray(chi.values(p)).astype(dtype)
        return np.where(e == 1, cp - 1, cp ** np.maximum(e - 1, 0) * (cp - 1))

    table = multiplicative_table(sieve, limit, prime_power, dtype=dtype)
    f = ArithSeq(1, limit, table[1:].copy())
    ft_vals = f.values.copy()
    ft_vals[0] = 0
    f_tilde = ArithSeq(1, limit, ft_vals)
    back = dirichlet_convolve(ArithSeq(1, limit, np.ones(limit, dtype=dtype)), f, hi=limit).values
    bad = np.nonzero(np.abs(back - chi_n) > (0 if real else 1e-9))[0]
    if len(bad):
        n = int(bad[0]) + 1
        raise IdentityViolation(f"(1 * f)({n}) != chi({n})", witness=n)
    low = np.nonzero(ft_vals[: min(y - 1, limit)] != 0)[0]
    if len(low):
        n = int(low[0]) + 1
        raise IdentityViolation(f"f_tilde({n}) != 0 below y = {y}", witness=n)
    return ChiMobiusExpansion(chi, limit, f, f_tilde, y)


def _window_conv(ft: ArithSeq, d_lo: int, d_hi: int, n_lo: int, n_hi: int) -> np.ndarray:
    """``(1_[d_lo, d_hi] * f_tilde)(n)`` for ``n`` in ``[n_lo, n_hi]``; zeros if the window is empty."""
    out = np.zeros(n_hi - n_lo + 1, dtype=ft.values.dtype)
    if d_hi < d_lo:
        return out
    ones = ArithSeq(d_lo, d_hi, np.ones(d_hi - d_lo + 1, dtype=ft.values.dtype))
    if d_lo * ft.lo > n_hi:
        return out
    conv = dirichlet_convolve(ones, ft, lo=n_lo, hi=n_hi)
    return conv.at(np.arange(n_lo, n_hi + 1))


@dataclass(frozen=True)
class FooReport:
    x: int
    nu: float
    y: int
    checked: int
    violations: int
    max_residual: float
    small_window: tuple[int, int]
    large_window: tuple[int, int]


@dataclass(frozen=True, eq=False)
class _Decomposition:
    n: np.ndarray
    chi_n: np.ndarray
    small: np.ndarray
    large: np.ndarray
    small_window: tuple[int, int]
    large_window: tuple[int, int]


def _small_cap(x: int, nu: float) -> int:
    """Largest integer ``d`` with ``d < x^nu``."""
    bound = x**nu
    d = max(0, math.ceil(bound) - 1)
    while d + 1 < bound:
        d += 1
    while d >= 1 and not d < bound:
        d -= 1
    return d


def _decompose(exp: ChiMobiusExpansion, x: int, nu: float) -> _Decomposition:
    if x > exp.limit:
        raise InvalidParameter(f"x = {x} exceeds expansion limit {exp.limit}")
    if x < 2:
        raise InvalidParameter("x must be >= 2")
    if not nu > 0:
        raise InvalidParameter("nu must be positive")
    n_lo, n_hi = -(-x // 2), x
    n = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    d_small = _small_cap(x, nu)
    d_large_lo = d_small + 1
    d_large_hi = x // exp.y
    small = _window_conv(exp.f_tilde, 1, d_small, n_lo, n_hi)
    large = _window_conv(exp.f_tilde, d_large_lo, d_large_hi, n_lo, n_hi)
    chi_n = np.asarray(exp.chi.values(n)).astype(exp.f.values.dtype)
    return _Decomposition(n, chi_n, small, large, (1, d_small), (d_large_lo, d_large_hi))


def verify_identity_foo(exp: ChiMobiusExpansion, x: int, nu: float = 0.3) -> FooReport:
    """Check ``chi = 1 + (1_[1,x^nu) * f_tilde) + (1_[x^nu, x/y] * f_tilde)`` on ``[x/2, x]``.

    Raises ``IdentityViolation`` carrying the smallest failing ``n``.
    """
    dec = _decompose(exp, x, nu)
    resid = np.abs(dec.chi_n - (1 + dec.small + dec.large))
    tol = 0 if exp.exact else 1e-9
    bad = np.nonzero(resid > tol)[0]
    if len(bad):
        n = int(dec.n[bad[0]])
        raise IdentityViolation(f"pointwise identity fails at n = {n}", witness=n)
    return FooReport(x, nu, exp.y, len(dec.n), 0, float(resid.max(initial=0)), dec.small_window, dec.large_window)


@dataclass(frozen=True)
class SplitReport:
    q: int
    x: int
    nu: float
    y: int
    X: complex | float
    X1: complex | float
    X2: complex | float
    X3: complex | float
    max_pointwise_residual: float

    @property
    def additivity_error(self) -> float:
        return abs(self.X - (self.X1 + self.X2 + self.X3))

    @property
    def additive(self) -> bool:
        scale = max(1.0, abs(self.X))
        return self.additivity_error <= 1e-6 * scale

    def to_text(self) -> str:
        rows = [("X", self.X), ("X1", self.X1), ("X2", self.X2), ("X3", self.X3), ("max_pointwise_residual", self.max_pointwise_residual)]
        return "".join(f"{k}\t{v!r}\n" for k, v in rows)


def split_X(chi, q: int, x: int, nu: float = 0.3, *, sieve: SieveTables | None = None) -> SplitReport:
    """``X = sum_{x/2 <= n <= x} chi(n) (Lambda(n+q) - 1)`` and its three-piece split."""
    if getattr(chi, "modulus", q) != q:
        raise InvalidParameter(f"character modulus {chi.modulus} != q = {q}")
    if x < 2 * q:
        raise ShiftTooLarge(f"x = {x} below 2q = {2 * q}")
    sieve = resolve_sieve(sieve, x + q, "x + q")
    exp = expand_chi(chi, x, sieve=sieve, allow_trivial=True)
    dec = _decompose(exp, x, nu)
    weight = sieve.mangoldt[dec.n + q] - 1.0
    resid = np.abs(dec.chi_n - (1 + dec.small + dec.large))

    def fs(v):
        return exact_or_fsum(np.asarray(v * weight))

    X = fs(dec.chi_n)
    X1 = fs(np.ones(len(dec.n)))
    X2 = fs(dec.small)
    X3 = fs(dec.large)
    return SplitReport(q, x, nu, exp.y, X, X1, X2, X3, float(resid.max(initial=0)))
