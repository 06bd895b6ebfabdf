"""Discrepancy statistics, the Type II dispersion experiment and divisor sums.

The Type II window width is ``log(x)^(-10A-10)`` exactly as in the dispersion
argument. With ``A >= 0`` that window contains no integer at any size a sieve
can reach, so desk-scale experiments pass ``-1 < A < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ._parallel import chunk_ranges, ordered_map
from .characters import DirichletCharacter
from .core_arith import ArithSeq, SieveTables, dirichlet_convolve, exact_or_fsum, factorize, resolve_sieve, tau_k_table
from .errors import (
    EmptyWindow,
    GridTooCoarse,
    InvalidArity,
    InvalidParameter,
    NotCoprime,
    NotPrimitive,
    WindowTooSmall,
)


def euler_phi(r: int) -> int:
    out = r
    for p in factorize(r):
        out -= out // p
    return out


@dataclass(frozen=True)
class ResidueClass:
    a: int
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise InvalidParameter("modulus must be >= 1")
        object.__setattr__(self, "a", (self.a - 1) % self.r + 1)

    @property
    def primitive(self) -> bool:
        return math.gcd(self.a, self.r) == 1


def _exact_sum(v: np.ndarray):
    return exact_or_fsum(v)


def discrepancy(seq: ArithSeq, cls: ResidueClass):
    """Mass of ``seq`` on ``a (r)`` minus the average over primitive classes.

    Exact mode returns a ``Fraction``; floating mode a float (complex if the
    sequence is complex).
    """
    if not cls.primitive:
        raise NotPrimitive(f"{cls.a} ({cls.r}) is not a primitive class")
    n = seq.support
    in_class = n % cls.r == cls.a % cls.r
    coprime = np.gcd(n, cls.r) == 1
    s_class = _exact_sum(seq.values[in_class])
    s_cop = _exact_sum(seq.values[coprime])
    phi = euler_phi(cls.r)
    if seq.exact:
        return Fraction(s_class) - Fraction(s_cop) / phi
    return s_class - s_cop / phi


# ---------------------------------------------------------------------------
# Elliott-Halberstam statistic


def _max_modulus(x: int, theta: float) -> int:
    """Largest integer ``r`` with ``r < x**theta`` (float comparison)."""
    bound = float(x) ** theta
    r = max(0, math.ceil(bound) - 1)
    while r + 1 < bound:
        r += 1
    while r >= 1 and not r < bound:
        r -= 1
    return r


def eh_sup_terms(lam: np.ndarray, r_lo: int, r_hi: int) -> tuple[np.ndarray, np.ndarray]:
    """For each ``r`` in ``[r_lo, r_hi]``: ``sup_a |Delta|`` and the smallest maximising ``a``.

    ``lam`` is the weight array indexed by ``n`` (index 0 ignored).
    """
    n = np.arange(1, len(lam), dtype=np.int64)
    w = lam[1:]
    sups = np.zeros(max(0, r_hi - r_lo + 1))
    args = np.zeros(max(0, r_hi - r_lo + 1), dtype=np.int64)
    for i, r in enumerate(range(r_lo, r_hi + 1)):
        buckets = np.bincount(n % r, weights=w, minlength=r)
        res = np.arange(r)
        units = np.gcd(res, r) == 1
        if r == 1:
            units[0] = True
        phi = int(units.sum())
        dev = np.abs(buckets[units] - buckets[units].sum() / phi)
        k = int(np.argmax(dev))
        sups[i] = dev[k]
        a = int(res[units][k])
        args[i] = a if a else r
    return sups, args


@dataclass(frozen=True)
class LevelSweepReport:
    x: int
    thetas: tuple[float, ...]
    E: tuple[float, ...]
    sup_by_modulus: np.ndarray = field(repr=False, compare=False)
    argmax_class: np.ndarray = field(repr=False, compare=False)

    @property
    def normalized(self) -> tuple[float, ...]:
        return tuple(e / self.x for e in self.E)

    @property
    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.E, self.E[1:]))


def eh_sweep(x: int, thetas: Sequence[float], *, sieve: SieveTables | None = None, threads: int = 1) -> LevelSweepReport:
    """``E(x, theta) = sum_{r < x^theta} sup_a |Delta(Lambda 1_[1,x]; a (r))|`` over a theta grid."""
    if x < 2:
        raise InvalidParameter("eh statistic needs x >= 2")
    for th in thetas:
        if not 0 < th < 1:
            raise InvalidParameter(f"theta must lie in (0, 1), got {th}")
    sieve = resolve_sieve(sieve, x, "x")
    lam = sieve.mangoldt[: x + 1]
    r_top = max((_max_modulus(x, th) for th in thetas), default=0)
    spans = chunk_ranges(1, r_top, max(threads, 1) * 4)
    parts = ordered_map(lambda s: eh_sup_terms(lam, *s), spans, threads)
    sups = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0)
    args = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, dtype=np.int64)
    E = tuple(math.fsum(sups[: _max_modulus(x, th)]) for th in thetas)
    return LevelSweepReport(x, tuple(thetas), E, sups, args)


def eh_statistic(x: int, theta: float, *, sieve: SieveTables | None = None) -> float:
    return eh_sweep(x, [theta], sieve=sieve).E[0]


# ---------------------------------------------------------------------------
# Type II experiment


@dataclass(frozen=True, eq=False)
class TypeIIExperiment:
    q: int
    chi: DirichletCharacter
    A: float
    eps: float
    delta: float
    varpi: float
    x: int
    N: int
    M: float
    D: np.ndarray
    alpha: ArithSeq
    beta: ArithSeq
    j: int = 1

    @property
    def window(self) -> tuple[float, float]:
        w = math.log(self.x) ** (-10 * self.A - 10)
        return (1 - w) * self.M, self.M

    @property
    def prime_window(self) -> tuple[float, float]:
        return self.q**self.eps, self.x**self.delta

    @cached_property
    def P_primes(self) -> list[int]:
        """Primes in ``[q^eps, x^delta]`` not dividing ``q``."""
        lo, hi = self.prime_window
        return [p for p in _primes_upto(int(math.floor(hi))) if p >= lo and self.q % p]

    @cached_property
    def conv(self) -> ArithSeq:
        return dirichlet_convolve(self.alpha, self.beta)

    @property
    def expected_D_size(self) -> float:
        """``M log(x)^(-10A-11)``, the size the asymptotic count predicts."""
        return self.M * math.log(self.x) ** (-10 * self.A - 11)

    @property
    def max_shift(self) -> int:
        return max(1, math.floor(self.q**self.eps))


def _primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    mark = np.ones(n + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if mark[p]:
            mark[p * p :: p] = False
    return np.nonzero(mark)[0].tolist()


def smooth_squarefree_members(
    m_lo: int, m_hi: int, p_lo: float, p_hi: float, q: int, sieve: SieveTables
) -> np.ndarray:
    """Squarefree ``m`` in ``[m_lo, m_hi]`` with every prime factor in ``[p_lo, p_hi]`` and ``(m, q) = 1``."""
    if m_hi < m_lo:
        return np.zeros(0, dtype=np.int64)
    m = np.arange(m_lo, m_hi + 1, dtype=np.int64)
    rem = m.copy()
    ok = np.ones(len(m), dtype=bool)
    while True:
        live = rem > 1
        if not live.any():
            break
        p = sieve.spf[rem[live]].astype(np.int64)
        good = (p >= p_lo) & (p <= p_hi) & (q % p != 0)
        nxt = rem[live] // p
        good &= nxt % p != 0
        idx = np.nonzero(live)[0]
        ok[idx[~good]] = False
        rem[idx] = np.where(good, nxt, 1)
    return m[ok]


def build_experiment(
    q: int,
    chi: DirichletCharacter,
    A: float = 1.0,
    eps: float = 0.05,
    delta: float = 0.2,
    varpi: float = 0.02,
    *,
    N: int | None = None,
    j: int = 1,
    sieve: SieveTables | None = None,
) -> TypeIIExperiment:
    """Set up ``alpha = 1_D conj(chi)`` and ``beta = 1_[N/2, N]``.

    ``N`` defaults to ``round(q^(1/2 - 2 varpi + eps))``; ``x`` is then
    ``floor(N^(1/(1/2 - 2 varpi)))`` and ``M = x^(1/2 + 2 varpi)``.
    """
    if chi.modulus != q:
        raise InvalidParameter(f"character modulus {chi.modulus} != q = {q}")
    if not 0 < varpi < 0.25:
        raise InvalidParameter("varpi must lie in (0, 1/4)")
    if eps <= 0 or delta <= 0:
        raise InvalidParameter("eps and delta must be positive")
    if A <= -1:
        raise InvalidParameter("A must exceed -1 so the window is a proper sub-interval")
    if j < 1:
        raise InvalidParameter("shift index j must be >= 1")
    lvl = 0.5 - 2 * varpi
    if N is None:
        N = round(q ** (lvl + eps))
    if N < 2:
        raise InvalidParameter(f"N = {N} too small")
    x = math.floor(N ** (1 / lvl))
    sieve = resolve_sieve(sieve, x, "x")
    M = x ** (0.5 + 2 * varpi)
    w = math.log(x) ** (-10 * A - 10)
    m_lo = max(1, math.ceil((1 - w) * M))
    m_hi = math.floor(M)
    p_lo, p_hi = q**eps, x**delta
    if not any(p >= p_lo for p in _primes_upto(int(p_hi))):
        raise EmptyWindow(f"no prime in [{p_lo:.4g}, {p_hi:.4g}]")
    D = smooth_squarefree_members(m_lo, m_hi, p_lo, p_hi, q, sieve)
    D = D[D > 1]
    if len(D) == 0:
        raise EmptyWindow(f"no qualifying m in [{(1 - w) * M:.6g}, {M:.6g}]")
    vals = np.zeros(int(D[-1] - D[0]) + 1, dtype=np.int64 if chi.is_real else np.complex128)
    vals[D - D[0]] = chi.conj_values(D)
    alpha = ArithSeq(int(D[0]), int(D[-1]), vals)
    beta = ArithSeq.indicator(-(-N // 2), N)
    return TypeIIExperiment(q, chi, A, eps, delta, varpi, x, N, M, D, alpha, beta, j)


def squarefree_moduli(primes: Sequence[int], cap: float) -> list[int]:
    """All products of distinct ``primes`` that are ``<= cap`` (including 1), ascending."""
    primes = sorted(primes)
    out: list[int] = []

    def walk(start: int, r: int):
        out.append(r)
        for i in range(start, len(primes)):
            nr = r * primes[i]
            if nr > cap:
                break
            walk(i + 1, nr)

    walk(0, 1)
    return sorted(out)


def class_discrepancies(seq: ArithSeq, a: int, moduli: Sequence[int]) -> list:
    """``Delta(seq; a (r))`` for each ``r``; ``a`` must be coprime to every ``r``."""
    n = seq.support
    v = seq.values
    out = []
    for r in moduli:
        if r == 1:
            out.append(Fraction(0) if seq.exact else 0.0)
            continue
        s_class = _exact_sum(v[n % r == a % r])
        s_cop = _exact_sum(v[np.gcd(n, r) == 1])
        phi = euler_phi(r)
        out.append(Fraction(s_class) - Fraction(s_cop) / phi if seq.exact else s_class - s_cop / phi)
    return out


def typeii_moduli(exp: TypeIIExperiment) -> list[int]:
    return squarefree_moduli(exp.P_primes, exp.x ** (0.5 + 2 * exp.varpi))


def typeii_statistic(exp: TypeIIExperiment, a: int) -> float:
    """``sum_{r | P, r <= x^(1/2+2 varpi)} |Delta(alpha*beta; a (r))|``."""
    bad = [p for p in exp.P_primes if a % p == 0]
    if bad:
        raise NotCoprime(f"a = {a} shares prime {bad[0]} with P")
    deltas = class_discrepancies(exp.conv, a, typeii_moduli(exp))
    if exp.conv.exact:
        return float(sum((abs(d) for d in deltas), Fraction(0)))
    return math.fsum(abs(d) for d in deltas)


@dataclass(frozen=True)
class DispersionResult:
    j: int
    X: object
    gamma: object
    reference: object
    disjoint: bool
    mass: object
    factor_product: object

    @property
    def identity_ok(self) -> bool:
        if isinstance(self.mass, (int, Fraction)) and isinstance(self.factor_product, (int, Fraction)):
            return self.mass == self.factor_product
        scale = max(1.0, abs(self.factor_product))
        return abs(self.mass - self.factor_product) <= 1e-9 * scale

    @property
    def excess(self) -> float:
        return abs(complex(self.X) - complex(self.reference))


def _shifted_dot(v: np.ndarray, s: int):
    if s >= len(v):
        return 0
    if s == 0:
        prod = v * v
    else:
        prod = v[s:] * v[:-s]
    return exact_or_fsum(prod)


def dispersion_X(exp: TypeIIExperiment, j: int | None = None) -> DispersionResult:
    """``X = sum_n (alpha*beta)(n) (alpha*beta)(n - jq)``, ``gamma = (2/x) sum alpha*beta``, ``gamma^2 x/2``."""
    j = exp.j if j is None else j
    conv = exp.conv
    mass = conv.total()
    prod = exp.alpha.total() * exp.beta.total()
    if conv.exact:
        gamma = Fraction(2 * mass, exp.x)
        reference = gamma * gamma * Fraction(exp.x, 2)
    else:
        gamma = 2 * mass / exp.x
        reference = gamma * gamma * exp.x / 2
    s = j * exp.q
    if s > exp.x:
        return DispersionResult(j, 0, gamma, reference, True, mass, prod)
    return DispersionResult(j, _shifted_dot(conv.values, s), gamma, reference, False, mass, prod)


def dispersion_sweep(exp: TypeIIExperiment) -> tuple[list[DispersionResult], DispersionResult]:
    """All shifts ``1 <= j <= floor(q^eps)`` and the one maximising ``|X - gamma^2 x/2|``."""
    rows = [dispersion_X(exp, j) for j in range(1, exp.max_shift + 1)]
    best = max(rows, key=lambda r: (r.excess, -r.j))
    return rows, best


@dataclass(frozen=True)
class CorrelationResult:
    raw: object
    factored: object
    leak: bool

    @property
    def agrees(self) -> bool:
        if isinstance(self.raw, int) and isinstance(self.factored, int):
            return self.raw == self.factored
        return abs(self.raw - self.factored) <= 1e-9 * max(1.0, abs(self.factored))


def chi_correlation(
    exp: TypeIIExperiment, J: int, weight: Callable[[np.ndarray], np.ndarray] | None = None
) -> CorrelationResult:
    """``sum_{j <= J} sum_{n <= x} chi(n) (alpha*beta)(n + jq)`` and its factored form.

    ``weight`` replaces ``chi`` (must be q-periodic and completely
    multiplicative for the factorisation to apply). ``leak`` is set when the
    support of ``alpha*beta`` is not inside ``(jq, x + jq]`` for every ``j``.
    """
    if J < 1:
        raise InvalidParameter("J must be >= 1")
    weight = exp.chi.values if weight is None else weight
    conv = exp.conv
    x, q = exp.x, exp.q
    dense = conv.dense(x + J * q)
    w = np.asarray(weight(np.arange(1, x + 1)))
    raw_terms = [exact_or_fsum(w * dense[1 + j * q : x + 1 + j * q]) for j in range(1, J + 1)]
    raw = sum(raw_terms) if conv.exact and w.dtype.kind in "iu" else _fsum_any(raw_terms)
    ma = exact_or_fsum(np.asarray(weight(exp.alpha.support)) * exp.alpha.values)
    mb = exact_or_fsum(np.asarray(weight(exp.beta.support)) * exp.beta.values)
    factored = J * ma * mb
    nz = conv.nonzero()
    leak = bool(len(nz)) and not (nz[0] > J * q and nz[-1] <= x + q)
    return CorrelationResult(raw, factored, leak)


def _fsum_any(vals):
    if any(isinstance(v, complex) for v in vals):
        return complex(math.fsum(v.real for v in vals), math.fsum(complex(v).imag for v in vals))
    return math.fsum(vals)


# ---------------------------------------------------------------------------
# divisor-function variants


def divisor_correlation(k: int, x: int, h: int, *, sieve: SieveTables | None = None) -> int:
    """``sum_{n <= x} tau_k(n) tau_k(n + h)`` as an exact integer."""
    if k < 1:
        raise InvalidArity("k must be >= 1")
    if x < 1 or h < 0:
        raise InvalidParameter("need x >= 1 and h >= 0")
    sieve = resolve_sieve(sieve, x + h, "x + h")
    tau = tau_k_table(k, x + h, sieve)
    a = tau[1 : x + 1]
    b = tau[1 + h : x + 1 + h]
    bound = int(a.max()) * int(b.max()) * x
    if bound < 2**62:
        return int(np.dot(a, b))
    return int(np.dot(a.astype(object), b.astype(object)))


LOG2 = math.log(2.0)


def psi_k_grid(k: int, grid: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``u = log t`` and values of the k-fold multiplicative convolution of ``1_[1/2,1]``.

    The convolution is taken against ``dt/t``; in ``u = log t`` it is the
    ordinary k-fold convolution of ``1_[-log 2, 0]``, computed on cells of
    width ``log 2 / grid`` and padded with zeros at both ends.
    """
    if k < 1:
        raise InvalidArity("k must be >= 1")
    if grid < 16:
        raise GridTooCoarse(f"grid must be >= 16, got {grid}")
    du = LOG2 / grid
    base = np.ones(grid)
    c = base
    for _ in range(k - 1):
        c = np.convolve(c, base) * du
    u = -k * LOG2 + (np.arange(len(c)) + k / 2) * du
    u = np.concatenate([[-k * LOG2], u, [0.0]])
    c = np.concatenate([[0.0], c, [0.0]])
    return u, c


def psi_k(k: int, t: float, grid: int = 2048) -> float:
    if t <= 0:
        raise InvalidParameter("t must be positive")
    if k == 1:
        if grid < 16:
            raise GridTooCoarse(f"grid must be >= 16, got {grid}")
        return 1.0 if 0.5 <= t <= 1 else 0.0
    if t > 1 or t < 2.0**-k:
        if grid < 16:
            raise GridTooCoarse(f"grid must be >= 16, got {grid}")
        return 0.0
    u, c = psi_k_grid(k, grid)
    return float(np.interp(math.log(t), u, c))


def psi_sq_integral(k: int, grid: int = 2048) -> float:
    """``int psi_k(t)^2 dt`` (an ``e^u du`` integral in the log variable)."""
    if k == 1:
        return 0.5
    u, c = psi_k_grid(k, grid)
    return float(np.trapezoid(c * c * np.exp(u), u))


@dataclass(frozen=True)
class BetaKReport:
    k: int
    Ns: tuple[int, ...]
    x: int
    j: int
    X: int
    mass: int
    gamma: Fraction
    psi_sq: float
    reference: float
    block_char_sums: tuple
    A: float


def betak_experiment(
    q: int,
    chi: DirichletCharacter | None,
    k: int,
    Ns: Sequence[int],
    A: float = 1.0,
    *,
    j: int = 1,
    grid: int = 2048,
) -> BetaKReport:
    """Shifted self-correlation of ``beta_1 * ... * beta_k`` with ``beta_i = 1_[N_i/2, N_i]``.

    ``gamma`` is normalised by ``prod(N_i / 2)`` so that ``gamma * psi_k(n/x)``
    models the convolution pointwise; the reference is ``gamma^2 x int psi_k^2``.
    """
    Ns = tuple(int(n) for n in Ns)
    if len(Ns) != k:
        raise InvalidArity(f"need {k} values of N, got {len(Ns)}")
    if any(n < 1 for n in Ns) or any(a < b for a, b in zip(Ns, Ns[1:])):
        raise InvalidParameter("need N_1 >= N_2 >= ... >= N_k >= 1")
    x = math.prod(Ns)
    if x < q:
        raise WindowTooSmall(f"x = {x} below q = {q}")
    betas = [ArithSeq.indicator(-(-n // 2), n) for n in Ns]
    conv = betas[0]
    for b in betas[1:]:
        conv = dirichlet_convolve(conv, b)
    mass = conv.total()
    X = _shifted_dot(conv.values, j * q)
    gamma = Fraction(mass * 2**k, x)
    psq = psi_sq_integral(k, grid)
    block_sums = ()
    if chi is not None:
        block_sums = tuple(exact_or_fsum(chi.values(b.support)) for b in betas)
    return BetaKReport(k, Ns, x, j, int(X), int(mass), gamma, psq, float(gamma) ** 2 * x * psq, block_sums, A)
