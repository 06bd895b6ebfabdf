"""Logarithmic density profiles and the Wirsing integral equation on a uniform grid.

Discretisation shared by both solvers: ``a`` is sampled at nodes ``a_i = a(ih)``
and read as piecewise linear, ``b`` is constant on cells ``[ih, (i+1)h)``. The
equation ``t a(t) = int_0^t a(u) b(t-u) du`` at node ``i`` becomes

    sum_{j<i} b_j w_{i-j} = t_i a_i,   w_m = h (a_{m-1} + a_m) / 2,

a lower-triangular system that can be solved for either unknown. Solving one
direction and then the other therefore reproduces the input up to rounding.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .characters import DirichletCharacter
from .core_arith import SieveTables, resolve_sieve
from .errors import BadSeed, GridTooCoarse, InvalidParameter, LimitExceeded, OutOfDomain

SQRT_E = math.sqrt(math.e)
KAPPA_HB = 1 / (4 * SQRT_E)
QUARTER = 0.25
POS_END = 1 / (2 * SQRT_E)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function: ``values[i]`` holds on ``[i h, (i+1) h)``."""

    h: float
    T: float
    values: np.ndarray
    bound: float | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidParameter("step h must be positive")
        n = grid_length(self.T, self.h)
        if len(self.values) != n:
            raise InvalidParameter(f"expected {n} values for T={self.T}, h={self.h}, got {len(self.values)}")
        if self.bound is not None and np.max(np.abs(self.values), initial=0.0) > self.bound + 1e-12:
            raise InvalidParameter(f"values exceed declared bound {self.bound}")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def index(self, t: float) -> int:
        i = int(math.floor(t / self.h + 1e-9))
        if not 0 <= i < self.n:
            raise OutOfDomain(f"t = {t} outside [0, {self.T})")
        return i

    def __call__(self, t: float) -> float:
        return float(self.values[self.index(t)])

    @classmethod
    def from_callable(cls, fn, T: float, h: float, *, at: str = "left", bound: float | None = None) -> "StepFunction":
        """Sample ``fn`` at left endpoints (``at='left'``) or cell midpoints (``at='mid'``)."""
        n = grid_length(T, h)
        off = 0.5 if at == "mid" else 0.0
        t = (np.arange(n) + off) * h
        return cls(h, T, np.asarray(fn(t), dtype=float), bound)

    @classmethod
    def constant(cls, c: float, T: float, h: float) -> "StepFunction":
        return cls(h, T, np.full(grid_length(T, h), float(c)))

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# h = {self.h!r}\n# T = {self.T!r}\n")
        for t, v in zip(self.nodes, self.values):
            buf.write(f"{t:.10g}\t{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "StepFunction":
        meta: dict[str, float] = {}
        vals = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = float(val)
            elif line.strip():
                vals.append(float(line.split()[1]))
        return cls(meta["h"], meta["T"], np.array(vals))


def grid_length(T: float, h: float) -> int:
    return max(1, math.ceil(T / h - 1e-9))


# ---------------------------------------------------------------------------
# density profiles


@dataclass(frozen=True, eq=False)
class DensityProfile:
    q: int
    chi: DirichletCharacter
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def lipschitz_excess(self, which: str = "A") -> float:
        """``max_{s,t} |F(t) - F(s)| - |t - s|`` over grid pairs."""
        f = self.A if which == "A" else self.B
        diff = np.abs(f[:, None] - f[None, :]) - np.abs(self.t[:, None] - self.t[None, :])
        return float(diff.max())


def _segment_prefix(weights: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """Compensated ``sum(weights[1:cut])`` for each ascending cut."""
    out = np.zeros(len(cuts), dtype=weights.dtype)
    acc_re, acc_im = [], []
    prev = 1
    for k, c in enumerate(cuts.tolist()):
        seg = weights[prev:c]
        acc_re.append(math.fsum(seg.real))
        if np.iscomplexobj(weights):
            acc_im.append(math.fsum(seg.imag))
            out[k] = complex(math.fsum(acc_re), math.fsum(acc_im))
        else:
            out[k] = math.fsum(acc_re)
        prev = max(prev, c)
    return out


def log_density_profiles(
    q: int, chi: DirichletCharacter, T: float, grid: int = 200, *, sieve: SieveTables | None = None
) -> DensityProfile:
    """``A_q(t) = (1/log q) sum_{n<q^t} chi(n)/n`` and the ``chi Lambda`` analogue on ``t = kT/grid``."""
    if grid < 1 or T <= 0:
        raise InvalidParameter("need grid >= 1 and T > 0")
    top_real = q**T
    if top_real > 1e12:
        raise LimitExceeded(f"q^T = {top_real:.3g} beyond any sieve")
    t = np.arange(grid + 1) * (T / grid)
    cuts = np.maximum(1, np.ceil(q**t - 1e-9).astype(np.int64))  # n < q^t  <=>  n < cut
    top = int(cuts[-1])
    sieve = resolve_sieve(sieve, max(top - 1, 2), "q^T")
    n = np.arange(top, dtype=np.int64)
    n[0] = 1
    cv = chi.values(n)
    cv = cv.astype(float) if chi.is_real else cv
    cv[0] = 0
    w_a = cv / n
    w_b = cv * sieve.mangoldt[:top] / n
    logq = math.log(q)
    return DensityProfile(q, chi, t, _segment_prefix(w_a, cuts) / logq, _segment_prefix(w_b, cuts) / logq)


# ---------------------------------------------------------------------------
# Volterra solvers


def _check_seed(a: StepFunction, kappa: float) -> None:
    if kappa < 2 * a.h:
        raise GridTooCoarse(f"kappa = {kappa} below 2h = {2 * a.h}")


def solve_b_given_a(a: StepFunction, kappa: float) -> StepFunction:
    """Deconvolve ``b`` from ``a`` by forward substitution.

    ``a`` must equal 1 on ``[0, kappa]``. The last cell has no equation of its
    own and copies its neighbour.
    """
    _check_seed(a, kappa)
    av = np.asarray(a.values, dtype=float)
    seed = av[: int(math.floor(kappa / a.h + 1e-9)) + 1]
    if abs(av[0] - 1) > 1e-12:
        raise BadSeed(f"a(0+) = {av[0]} != 1")
    if np.max(np.abs(seed - 1)) > 1e-12:
        raise BadSeed("a is not 1 on the seed segment [0, kappa]")
    h, n = a.h, a.n
    w = np.zeros(n)
    w[1:] = h * (av[:-1] + av[1:]) / 2
    b = np.zeros(n)
    for i in range(1, n):
        s = np.dot(b[: i - 1], w[i:1:-1]) if i > 1 else 0.0
        b[i - 1] = (i * h * av[i] - s) / w[1]
    if n > 1:
        b[-1] = b[-2]
    else:
        b[0] = 1.0
    return StepFunction(h, a.T, b)


def solve_a_given_b(b: StepFunction, kappa: float) -> StepFunction:
    """Forward Volterra stepping for ``a`` with ``a = 1`` on ``[0, kappa]``."""
    if kappa < 2 * b.h:
        raise GridTooCoarse(f"kappa = {kappa} below 2h = {2 * b.h}")
    bv = np.asarray(b.values, dtype=float)
    h, n = b.h, b.n
    a = np.ones(n)
    s = np.zeros(n)  # s[m] = a[m] + a[m+1]
    i0 = int(math.floor(kappa / h + 1e-9)) + 1
    s[: max(0, min(i0, n) - 1)] = 2.0
    for i in range(i0, n):
        rhs = bv[0] * h * a[i - 1] / 2
        if i > 1:
            rhs += h / 2 * np.dot(bv[1:i], s[i - 2 :: -1][: i - 1])
        a[i] = rhs / (h * (i - bv[0] / 2))
        s[i - 1] = a[i - 1] + a[i]
    return StepFunction(h, b.T, a)


def wirsing_residuals(a: StepFunction, b: StepFunction, upto: float | None = None) -> np.ndarray:
    """``|t_i a_i - sum_{j<i} b_j w_{i-j}|`` at every node up to ``upto``."""
    if a.h != b.h:
        raise InvalidParameter("a and b must share the grid step")
    n = min(a.n, b.n)
    if upto is not None:
        n = min(n, int(math.floor(upto / a.h + 1e-9)) + 1)
    h = a.h
    av = a.values[:n]
    w = np.zeros(n)
    w[1:] = h * (av[:-1] + av[1:]) / 2
    conv = np.convolve(b.values[:n], w)[:n]  # conv[i] = sum_j b_j w_{i-j}
    return np.abs(np.arange(n) * h * av - conv)


def wirsing_residual(a: StepFunction, b: StepFunction, upto: float | None = None, exclude=(), margin: int = 5) -> float:
    """Max node residual, skipping ``margin*h``-neighbourhoods of the points in ``exclude``."""
    r = wirsing_residuals(a, b, upto)
    t = np.arange(len(r)) * a.h
    keep = np.ones(len(r), dtype=bool)
    for p in exclude:
        keep &= np.abs(t - p) > margin * a.h
    return float(r[keep].max(initial=0.0))


# ---------------------------------------------------------------------------
# closed-form reference


def heathbrown_a(t) -> np.ndarray:
    """1 up to ``1/(4 sqrt e)``, then ``1 - 2 log(4 sqrt(e) t)`` up to ``1/4``, then 0."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    mid = 1 - 2 * np.log(safe / KAPPA_HB)
    return np.where(t <= KAPPA_HB, 1.0, np.where(t <= QUARTER, mid, 0.0))


def delay_kernel(h: float) -> tuple[int, np.ndarray]:
    """Weights ``L_m = int du/u`` over ``((m-1/2)h, (m+1/2)h] & [kappa, 1/4]``; returns (first m, weights)."""
    m = np.arange(int(math.ceil(QUARTER / h)) + 3)
    lo = np.maximum((m - 0.5) * h, KAPPA_HB)
    hi = np.minimum((m + 0.5) * h, QUARTER)
    L = np.where(hi > lo, np.log(np.maximum(hi, lo) / lo), 0.0)
    nz = np.nonzero(L)[0]
    return int(nz[0]), L[nz[0] : nz[-1] + 1]


def heathbrown_reference(T: float = 2.0, h: float = 1e-4) -> tuple[StepFunction, StepFunction]:
    """Closed-form ``a`` and ``b`` continued past 1/4 by the delay equation.

    ``b`` cells are classified by their midpoints; for cells beyond 1/4 the
    delay equation ``b(t) = 2 int b(t-u) du/u`` is discretised with exact
    log-weights against midpoint-aligned lags.
    """
    if T > 2:
        raise InvalidParameter("reference is only provided for T <= 2")
    if not h > 0:
        raise InvalidParameter("step h must be positive")
    n = grid_length(T, h)
    mid = (np.arange(n) + 0.5) * h
    b = np.where(mid <= KAPPA_HB, 1.0, -1.0)
    m0, L = delay_kernel(h)
    lags = m0 + np.arange(len(L))
    start = int(np.searchsorted(mid, QUARTER, side="right"))
    for i in range(start, n):
        b[i] = 2 * np.dot(L, b[i - lags])
    a = heathbrown_a(np.arange(n) * h)
    return StepFunction(h, T, a, bound=1.0), StepFunction(h, T, b)


def kernel_mass(h: float) -> float:
    """Grid value of ``2 int_{1/(4 sqrt e)}^{1/4} du/u`` (exactly 1)."""
    return 2 * math.fsum(delay_kernel(h)[1])


def delay_equation_residual(b: StepFunction, t: float) -> float:
    """``|b(t) - 2 int_{1/(4 sqrt e)}^{1/4} b(t-u) du/u|`` with the step ``b`` integrated exactly."""
    h = b.h
    if t <= QUARTER + 2 * h:
        raise OutOfDomain(f"delay equation needs t > 1/4 + 2h, got {t}")
    if t - KAPPA_HB >= b.T:
        raise OutOfDomain(f"t - 1/(4 sqrt e) beyond the domain of b")
    jlo = int(math.floor((t - QUARTER) / h))
    jhi = int(math.floor((t - KAPPA_HB) / h))
    js = np.arange(jlo, jhi + 1)
    lo = np.maximum(t - (js + 1) * h, KAPPA_HB)
    hi = np.minimum(t - js * h, QUARTER)
    keep = hi > lo
    integral = math.fsum(b.values[js[keep]] * np.log(hi[keep] / lo[keep]))
    return abs(float(b.values[b.index(t)]) - 2 * integral)
