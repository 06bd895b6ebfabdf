import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_divisors, brute_factor
from ehlab.characters import DirichletCharacter
from ehlab.core_arith import ArithSeq
from ehlab.distribution import (
    ResidueClass,
    betak_experiment,
    build_experiment,
    chi_correlation,
    discrepancy,
    dispersion_X,
    dispersion_sweep,
    divisor_correlation,
    eh_statistic,
    eh_sweep,
    euler_phi,
    psi_k,
    psi_k_grid,
    psi_sq_integral,
    squarefree_moduli,
    typeii_moduli,
    typeii_statistic,
)
from ehlab.errors import EmptyWindow, GridTooCoarse, InvalidParameter, NotCoprime, NotPrimitive, WindowTooSmall


def brute_discrepancy(vals: dict[int, Fraction], a: int, r: int) -> Fraction:
    phi = sum(1 for b in range(1, r + 1) if math.gcd(b, r) == 1)
    s_class = sum((v for n, v in vals.items() if n % r == a % r), Fraction(0))
    s_cop = sum((v for n, v in vals.items() if math.gcd(n, r) == 1), Fraction(0))
    return s_class - s_cop / phi


def small_experiment(q=11, A=-0.95, delta=0.5, N=69):
    return build_experiment(q, DirichletCharacter.quadratic(q), A, 0.05, delta, 0.02, N=N)


# --- discrepancy -----------------------------------------------------------


def test_discrepancy_example():
    assert discrepancy(ArithSeq.indicator(1, 10), ResidueClass(1, 3)) == Fraction(1, 2)


def test_discrepancy_modulus_one_and_errors():
    seq = ArithSeq.from_values(1, np.arange(1, 30))
    assert discrepancy(seq, ResidueClass(1, 1)) == 0
    with pytest.raises(NotPrimitive):
        discrepancy(seq, ResidueClass(2, 4))


def test_residue_class_normalises():
    assert ResidueClass(0, 5).a == 5 and ResidueClass(7, 5).a == 2
    assert ResidueClass(3, 9).primitive is False


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=60), st.integers(1, 30), st.integers(1, 40))
def test_discrepancy_telescopes(vals, lo, r):
    seq = ArithSeq.from_values(lo, np.array(vals, dtype=np.int64))
    total = sum((discrepancy(seq, ResidueClass(a, r)) for a in range(1, r + 1) if math.gcd(a, r) == 1), Fraction(0))
    assert total == 0


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60), st.integers(2, 30))
def test_discrepancy_telescopes_float(vals, r):
    seq = ArithSeq.from_values(1, np.array(vals, dtype=float))
    total = math.fsum(discrepancy(seq, ResidueClass(a, r)) for a in range(1, r + 1) if math.gcd(a, r) == 1)
    assert abs(total) <= 1e-9 * max(1.0, sum(map(abs, vals)))


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=40), st.integers(1, 25), st.data())
def test_discrepancy_matches_brute(vals, r, data):
    a = data.draw(st.sampled_from([a for a in range(1, r + 1) if math.gcd(a, r) == 1]))
    seq = ArithSeq.from_values(3, np.array(vals, dtype=np.int64))
    brute = brute_discrepancy({3 + i: Fraction(v) for i, v in enumerate(vals)}, a, r)
    assert discrepancy(seq, ResidueClass(a, r)) == brute


# --- Elliott-Halberstam statistic -----------------------------------------


def eh_oracle(x: int, theta: float) -> float:
    lam = [0.0] * (x + 1)
    for n in range(2, x + 1):
        f = brute_factor(n)
        if len(f) == 1:
            lam[n] = math.log(next(iter(f)))
    total = 0.0
    r = 1
    while r < x**theta:
        units = [a for a in range(1, r + 1) if math.gcd(a, r) == 1]
        cop = math.fsum(lam[n] for n in range(1, x + 1) if math.gcd(n, r) == 1)
        best = 0.0
        for a in units:
            s = math.fsum(lam[n] for n in range(a % r or r, x + 1, r))
            best = max(best, abs(s - cop / len(units)))
        total += best
        r += 1
    return total


def test_eh_statistic_matches_double_loop():
    assert eh_statistic(1000, 0.3) == pytest.approx(eh_oracle(1000, 0.3), rel=1e-9)
    assert eh_statistic(1000, 0.45) == pytest.approx(eh_oracle(1000, 0.45), rel=1e-9)


def test_eh_statistic_small_theta_is_zero():
    assert eh_statistic(10**4, 1e-6) == 0


def test_eh_sweep_monotone_and_threads():
    grid = [0.1, 0.15, 0.2, 0.3, 0.35, 0.4, 0.5]
    one = eh_sweep(20000, grid)
    four = eh_sweep(20000, grid, threads=4)
    assert one.monotone and one.E == four.E
    assert one.normalized[-1] == one.E[-1] / 20000


def test_eh_statistic_errors(sieve):
    with pytest.raises(InvalidParameter):
        eh_statistic(100, 1.2)
    with pytest.raises(Exception):
        eh_sweep(sieve.limit + 1, [0.2], sieve=sieve)


# --- Type II experiment ----------------------------------------------------


def test_experiment_invariants():
    exp = small_experiment()
    lvl = 0.5 - 2 * exp.varpi
    assert exp.N == round(exp.x**lvl)
    assert 0.5 <= exp.N * exp.M / exp.x <= 2
    lo, hi = exp.window
    p_lo, p_hi = exp.prime_window
    assert len(exp.D) > 0
    for m in exp.D.tolist():
        f = brute_factor(m)
        assert all(e == 1 for e in f.values())
        assert lo <= m <= hi
        assert all(p_lo <= p <= p_hi for p in f)
        assert math.gcd(m, exp.q) == 1
    # nothing in the window is missed
    missed = [
        m
        for m in range(math.ceil(lo), math.floor(hi) + 1)
        if m > 1
        and all(e == 1 for e in brute_factor(m).values())
        and all(p_lo <= p <= p_hi and exp.q % p for p in brute_factor(m))
    ]
    assert missed == exp.D.tolist()
    assert exp.beta.lo == math.ceil(exp.N / 2) and exp.beta.hi == exp.N


def test_experiment_alpha_is_conjugate_character():
    exp = small_experiment()
    for m in range(exp.alpha.lo, exp.alpha.hi + 1):
        expect = exp.chi.value(m) if m in set(exp.D.tolist()) else 0
        assert exp.alpha(m) == expect


def test_experiment_empty_windows():
    chi = DirichletCharacter.quadratic(11)
    with pytest.raises(EmptyWindow):
        build_experiment(11, chi, -0.95, 0.05, 0.01, 0.02, N=69)
    with pytest.raises(EmptyWindow):
        build_experiment(11, chi, 1.0, 0.05, 0.5, 0.02, N=69)


def test_experiment_parameter_errors():
    chi = DirichletCharacter.quadratic(11)
    with pytest.raises(InvalidParameter):
        build_experiment(13, chi)
    with pytest.raises(InvalidParameter):
        build_experiment(11, chi, -1.0, 0.05, 0.5, 0.02, N=69)


def bucket_oracle(exp, a):
    conv = {}
    for m in exp.alpha.nonzero().tolist():
        for n in range(exp.beta.lo, exp.beta.hi + 1):
            conv[m * n] = conv.get(m * n, 0) + int(exp.alpha(m))
    primes = exp.P_primes
    cap = exp.x ** (0.5 + 2 * exp.varpi)
    total = Fraction(0)
    for size in range(len(primes) + 1):
        for combo in __import__("itertools").combinations(primes, size):
            r = math.prod(combo)
            if r > cap:
                continue
            buckets = [0] * r
            for n, v in conv.items():
                buckets[n % r] += v
            units = [b for b in range(r) if math.gcd(b, r) == 1] if r > 1 else [0]
            cop = sum(buckets[b] for b in units)
            total += abs(Fraction(buckets[a % r]) - Fraction(cop, len(units)))
    return float(total)


@pytest.mark.parametrize("q,delta,a", [(11, 0.5, 1), (11, 0.3, 1), (13, 0.5, 1), (11, 0.5, 10007)])
def test_typeii_matches_bucketing_oracle(q, delta, a):
    exp = small_experiment(q=q, delta=delta)
    if any(a % p == 0 for p in exp.P_primes):
        pytest.skip("a not coprime")
    assert typeii_statistic(exp, a) == pytest.approx(bucket_oracle(exp, a), rel=1e-12)


def test_typeii_moduli_are_capped_products():
    exp = small_experiment()
    cap = exp.x ** (0.5 + 2 * exp.varpi)
    mods = typeii_moduli(exp)
    assert mods[0] == 1 and all(r <= cap for r in mods)
    assert all(max(brute_factor(r).values(), default=1) == 1 for r in mods)
    assert squarefree_moduli([2, 3, 5], 10) == [1, 2, 3, 5, 6, 10]


def test_typeii_zero_alpha_and_single_prime():
    exp = small_experiment()
    zero = dataclasses.replace(exp, alpha=ArithSeq(exp.alpha.lo, exp.alpha.hi, np.zeros_like(exp.alpha.values)))
    assert typeii_statistic(zero, 1) == 0
    one_prime = exp.P_primes[3]
    single = small_experiment()
    single.__dict__["P_primes"] = [one_prime]
    expect = abs(discrepancy(single.conv, ResidueClass(1, one_prime)))
    assert typeii_statistic(single, 1) == pytest.approx(float(expect))


def test_typeii_not_coprime():
    exp = small_experiment()
    with pytest.raises(NotCoprime):
        typeii_statistic(exp, exp.P_primes[0])


def test_dispersion_matches_double_loop():
    exp = small_experiment()
    conv = {n: int(exp.conv(n)) for n in exp.conv.nonzero().tolist()}
    s = exp.q
    brute = sum(v * conv.get(n - s, 0) for n, v in conv.items())
    res = dispersion_X(exp)
    assert res.X == brute and not res.disjoint
    assert res.gamma * Fraction(exp.x, 2) == exp.alpha.total() * exp.beta.total()
    assert res.identity_ok
    assert res.reference == res.gamma**2 * Fraction(exp.x, 2)


def test_dispersion_disjoint_shift():
    exp = small_experiment()
    res = dispersion_X(exp, j=exp.x // exp.q + 1)
    assert res.X == 0 and res.disjoint


def test_dispersion_sweep_argmax():
    exp = small_experiment(q=101)
    rows, best = dispersion_sweep(exp)
    assert [r.j for r in rows] == list(range(1, math.floor(101**0.05) + 1))
    assert best.excess == max(r.excess for r in rows)


@pytest.mark.parametrize("q", [11, 13, 101])
def test_chi_correlation_factorises(q):
    exp = small_experiment(q=q)
    res = chi_correlation(exp, 1)
    brute = sum(
        exp.chi.value(n) * int(exp.conv(n + q)) for n in range(1, exp.x + 1)
    )
    assert res.raw == brute
    if not res.leak:
        assert res.agrees


def test_chi_correlation_ones_weight_and_zero_alpha():
    exp = small_experiment()
    ones = chi_correlation(exp, 1, weight=lambda n: np.ones(len(n), dtype=np.int64))
    assert ones.factored == exp.alpha.total() * exp.beta.total()
    zero = dataclasses.replace(exp, alpha=ArithSeq(exp.alpha.lo, exp.alpha.hi, np.zeros_like(exp.alpha.values)))
    assert chi_correlation(zero, 1).raw == 0


def test_mass_identity_over_many_experiments():
    chis = [11, 13, 19, 23, 29, 31, 37, 43, 47, 101]
    count = 0
    for q in chis:
        for N in (40, 55, 69, 80, 95):
            try:
                exp = small_experiment(q=q, N=N)
            except EmptyWindow:
                continue
            assert dispersion_X(exp).identity_ok
            count += 1
    assert count >= 30


# --- divisor variants -------------------------------------------------------


def brute_tau(k, n):
    if k == 1:
        return 1
    return sum(brute_tau(k - 1, n // d) for d in brute_divisors(n))


def test_divisor_correlation_examples():
    assert divisor_correlation(1, 500, 3) == 500
    assert divisor_correlation(2, 10, 1) == 74


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("h", [0, 1, 7])
def test_divisor_correlation_matches_enumeration(k, h):
    x = 1000 if k <= 2 else 300
    tau = [0] + [brute_tau(k, n) for n in range(1, x + h + 1)]
    assert divisor_correlation(k, x, h) == sum(tau[n] * tau[n + h] for n in range(1, x + 1))


def test_psi_k_basic():
    assert psi_k(1, 0.75) == 1.0 and psi_k(1, 0.4) == 0.0
    assert psi_k(3, 1.2) == 0 and psi_k(3, 0.1) == 0
    assert psi_k(2, 0.7) == pytest.approx(math.log(1 / 0.7), abs=1e-5)
    with pytest.raises(GridTooCoarse):
        psi_k(2, 0.5, grid=8)


def test_psi_2_monte_carlo():
    rng = np.random.default_rng(20241015)
    s = rng.uniform(0.5, 1.0, 400000)
    t = 0.5
    inside = ((t / s >= 0.5) & (t / s <= 1.0)) / s
    est = 0.5 * inside.mean()
    se = 0.5 * inside.std(ddof=1) / math.sqrt(len(s))
    assert abs(psi_k(2, t) - est) <= 3 * se + 1e-6


@pytest.mark.parametrize("k", [2, 3, 4])
def test_psi_k_mass(k):
    u, c = psi_k_grid(k)
    assert np.trapezoid(c * np.exp(u), u) == pytest.approx(2.0**-k, rel=1e-4)


def test_psi_sq_integral_against_closed_form():
    from scipy.integrate import quad

    exact = quad(lambda t: math.log(4 * t) ** 2, 0.25, 0.5)[0] + quad(lambda t: math.log(t) ** 2, 0.5, 1)[0]
    assert psi_sq_integral(2) == pytest.approx(exact, rel=1e-5)


def test_betak_k1_is_interval_overlap():
    for N, q in [(1000, 101), (400, 37), (300, 151)]:
        rep = betak_experiment(q, None, 1, [N])
        lo, hi = math.ceil(N / 2), N
        assert rep.X == max(0, hi - (lo + q) + 1)


def test_betak_k2_double_loop():
    rep = betak_experiment(101, DirichletCharacter.quadratic(101), 2, [120, 60])
    B = {}
    for m in range(60, 121):
        for n in range(30, 61):
            B[m * n] = B.get(m * n, 0) + 1
    assert rep.X == sum(v * B.get(n - 101, 0) for n, v in B.items())
    assert rep.mass == sum(B.values())


def test_betak_gamma_factorises():
    Ns = [90, 70, 40]
    rep = betak_experiment(1009, None, 3, Ns)
    sums = [N - math.ceil(N / 2) + 1 for N in Ns]
    assert rep.gamma * math.prod(Fraction(N, 2) for N in Ns) == math.prod(sums)


def test_betak_errors():
    with pytest.raises(WindowTooSmall):
        betak_experiment(1009, None, 1, [100])
    with pytest.raises(InvalidParameter):
        betak_experiment(11, None, 2, [10, 20])


def test_euler_phi():
    assert [euler_phi(n) for n in (1, 2, 9, 12, 97)] == [1, 1, 6, 4, 96]
