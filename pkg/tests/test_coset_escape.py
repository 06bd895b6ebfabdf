import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_primes
from ehlab.coset_escape import (
    Configuration,
    ContainedInProperSubgroup,
    FiniteAbelianGroup,
    Subgroup,
    abelian_groups,
    escape_k,
    generated_subgroup,
    primroot_escape,
    stable_sumset_masks,
    subgroup_enumerate,
    sumset_iterate,
    verify_proposition,
)
from ehlab.errors import InvalidArity, InvalidParameter, LimitExceeded, MissingIdentity, NotProper

Z6 = FiniteAbelianGroup((6,))


def sub(G, members):
    return Subgroup(G, tuple(sorted(G.index(m) for m in members)))


def brute_subgroups(G):
    """Every subset containing 0 and closed under addition (finite, so also under negation)."""
    n = G.order
    out = []
    for bits in range(1 << (n - 1)):
        S = {0} | {e for e in range(1, n) if bits >> (e - 1) & 1}
        if all(G.add(a, b) in S for a in S for b in S):
            out.append(tuple(sorted(S)))
    return sorted(out)


# --- groups and sumsets ----------------------------------------------------


def test_group_basics():
    G = FiniteAbelianGroup((2, 6))
    assert G.order == 12 and G.dimension == 3 and G.name == "Z2xZ6"
    assert G.element(G.index((1, 5))) == (1, 5)
    i = G.index((1, 4))
    assert G.add(i, G.neg(i)) == 0


def test_sumset_examples():
    assert sumset_iterate(Z6, [0], 5) == {0}
    assert sumset_iterate(Z6, [0, 2, 3], 2) == {0, 2, 3, 4, 5}
    with pytest.raises(InvalidArity):
        sumset_iterate(Z6, [0], 0)


@given(st.sampled_from([(6,), (2, 4), (3, 3), (10,), (2, 2, 2)]), st.data())
def test_sumset_matches_pair_enumeration(orders, data):
    G = FiniteAbelianGroup(orders)
    A = data.draw(st.sets(st.integers(0, G.order - 1), min_size=1, max_size=5))
    k = data.draw(st.integers(1, 3))
    direct = set()
    for combo in itertools.product(sorted(A), repeat=k):
        coords = np.sum([G.element(a) for a in combo], axis=0) % np.array(orders)
        direct.add(G.index(tuple(int(c) for c in coords)))
    assert sumset_iterate(G, A, k) == direct
    if 0 in A:
        assert sumset_iterate(G, A, k) <= sumset_iterate(G, A, k + 1)


@pytest.mark.parametrize("orders,count", [((7,), 2), ((6,), 4), ((2, 2), 5), ((2, 4), 8), ((3, 3), 6)])
def test_subgroup_counts(orders, count):
    G = FiniteAbelianGroup(orders)
    subs = subgroup_enumerate(G)
    assert len(subs) == count
    assert sorted(H.members for H in subs) == brute_subgroups(G)


def test_subgroups_of_z6():
    assert sorted(H.members for H in subgroup_enumerate(Z6)) == [(0,), (0, 1, 2, 3, 4, 5), (0, 2, 4), (0, 3)]


def test_subgroup_limit():
    with pytest.raises(LimitExceeded):
        subgroup_enumerate(FiniteAbelianGroup((10007,)))


def test_abelian_group_classes():
    assert [G.orders for G in abelian_groups(8)] == [(8,), (2, 4), (2, 2, 2)]
    assert len(abelian_groups(16)) == 5 and len(abelian_groups(36)) == 4


def test_stabilization_exhaustive():
    for n in range(1, 21):
        for G in abelian_groups(n):
            if G.order == 1:
                continue
            subs = sorted(subgroup_enumerate(G), key=lambda H: H.order)
            sub_masks = np.array([sum(1 << e for e in H.members) for H in subs], dtype=np.int64)
            codes = np.arange(1 << (G.order - 1), dtype=np.int64)
            got = stable_sumset_masks(G, codes)
            A = (codes << 1) | 1
            # the smallest subgroup containing A is the subgroup it generates
            contains = (A[:, None] & ~sub_masks[None, :]) == 0
            want = sub_masks[np.argmax(contains, axis=1)]
            assert np.array_equal(got, want), G.name


@given(st.sampled_from([(6,), (2, 4), (12,), (2, 6), (3, 3)]), st.data())
def test_full_sumset_is_generated_subgroup(orders, data):
    G = FiniteAbelianGroup(orders)
    A = data.draw(st.sets(st.integers(1, G.order - 1), max_size=4)) | {0}
    assert sumset_iterate(G, A, G.order) == set(generated_subgroup(G, A).members)


# --- escape ----------------------------------------------------------------


def test_escape_examples():
    cover = [(0, sub(Z6, [0, 3])), (0, sub(Z6, [0, 2, 4]))]
    assert escape_k(Z6, [0, 2, 3], cover) == 2
    assert 5 in sumset_iterate(Z6, [0, 2, 3], 2)
    res = escape_k(Z6, [0, 2], cover)
    assert isinstance(res, ContainedInProperSubgroup) and res.subgroup.members == (0, 2, 4)


def test_escape_errors():
    cover = [(0, sub(Z6, [0, 3]))]
    with pytest.raises(MissingIdentity):
        escape_k(Z6, [1, 2], cover)
    with pytest.raises(NotProper):
        escape_k(Z6, [0], [(r, sub(Z6, [0, 3])) for r in range(3)])


@pytest.mark.parametrize("a,b", [(2, 3), (3, 3), (2, 5), (4, 2)])
def test_direct_product_escapes_by_two(a, b):
    G = FiniteAbelianGroup((a, b))
    H1 = sub(G, [(i, 0) for i in range(a)])
    H2 = sub(G, [(0, j) for j in range(b)])
    for bits in range(1 << (G.order - 1)):
        A = [0] + [e for e in range(1, G.order) if bits >> (e - 1) & 1]
        if set(A) <= set(H1.members) or set(A) <= set(H2.members):
            continue
        k = escape_k(G, A, [(0, H1), (0, H2)])
        assert isinstance(k, int) and k <= 2


@given(st.sampled_from([(6,), (2, 4), (12,), (2, 6), (8,)]), st.data())
def test_escape_minimal(orders, data):
    G = FiniteAbelianGroup(orders)
    subs = [H for H in subgroup_enumerate(G) if H.proper]
    picks = data.draw(st.lists(st.tuples(st.integers(0, G.order - 1), st.sampled_from(subs)), min_size=1, max_size=2))
    cover = set().union(*(H.coset(r) for r, H in picks))
    if len(cover) == G.order:
        return
    A = data.draw(st.sets(st.integers(1, G.order - 1), max_size=4)) | {0}
    res = escape_k(G, A, picks)
    if isinstance(res, int):
        assert not sumset_iterate(G, A, res) <= cover
        if res >= 2:
            assert sumset_iterate(G, A, res - 1) <= cover
    else:
        assert res.subgroup.proper and sumset_iterate(G, A, G.order) <= cover


def test_configuration():
    H = sub(Z6, [0, 3])
    c = Configuration(3, Z6, frozenset([0, 3]), ((0, H), (2, H)))
    assert c.complexity == (0, 2)
    with pytest.raises(InvalidParameter):
        Configuration(2, Z6, frozenset([0, 1]), ((0, H),))
    with pytest.raises(InvalidParameter):
        Configuration(1, Z6, frozenset([0]), ((0, H), (3, H)))
    K = sub(Z6, [0, 2, 4])
    with pytest.raises(NotProper):
        Configuration(1, Z6, frozenset([0]), ((0, K), (1, K)))
    with pytest.raises(MissingIdentity):
        Configuration(1, Z6, frozenset([2]), ((0, H),))


# --- the dichotomy ---------------------------------------------------------


def test_prime_order_escapes_at_one():
    rep = verify_proposition(1, 1, 20)
    assert rep.violations == 0 and rep.max_k == 1
    for row in rep.rows:
        assert row.k == 1 if row.outcome == "escape" else row.size_A == 1


def test_prime_order_two_singletons():
    # {0} and {a} are both cosets of {0}, so A = {0, a} needs k = 2
    G = FiniteAbelianGroup((7,))
    triv = sub(G, [0])
    assert escape_k(G, [0, 3], [(0, triv), (3, triv)]) == 2
    assert verify_proposition(1, 2, 20).max_k == 2


def test_single_coset_resolves_by_two():
    rep = verify_proposition(2, 1, 20)
    assert rep.violations == 0 and rep.max_k <= 2


def test_d2_m2_exhaustive():
    rep = verify_proposition(2, 2, 20, samples=0)
    assert rep.violations == 0 and rep.instances > 0 and rep.max_k >= 2
    assert {r.outcome for r in rep.rows} == {"escape", "proper"}


def test_sampled_is_deterministic():
    a = verify_proposition(2, 2, 40, seed=7, samples=200)
    b = verify_proposition(2, 2, 40, seed=7, samples=200)
    c = verify_proposition(2, 2, 40, seed=8, samples=200)
    assert a.to_tsv() == b.to_tsv() and a.violations == 0
    assert a.to_tsv() != c.to_tsv()


def test_threads_do_not_change_report():
    assert verify_proposition(2, 2, 20, samples=0, threads=1).to_tsv() == verify_proposition(2, 2, 20, samples=0, threads=4).to_tsv()


def test_caps():
    with pytest.raises(LimitExceeded):
        verify_proposition(4, 2, 20)
    with pytest.raises(LimitExceeded):
        verify_proposition(2, 2, 61)


# --- primitive roots -------------------------------------------------------


def test_primroot_examples():
    r = primroot_escape(7, 2, 5)
    assert r.logs == (0, 2) and not r.escapes and r.agree
    assert {pow(2, j, 7) for j in range(6)} == {1, 2, 4}
    r = primroot_escape(7, 3, 1)
    assert r.escape_k == 1 and r.witness == (3,)
    assert primroot_escape(3, 2, 1).escape_k == 1


def brute_primroot_k(p, bound, k):
    order = p - 1
    roots = {g for g in range(1, p) if len({pow(g, j, p) for j in range(order)}) == order}
    reach = {1}
    for j in range(1, k + 1):
        reach = {r * b % p for r in reach for b in range(1, bound + 1) if b % p}
        if reach & roots:
            return j
    return None


def test_primroot_against_power_enumeration():
    for p in [p for p in brute_primes(200) if p > 2]:
        for bound in (2, 3, 5):
            assert primroot_escape(p, bound, 3).escape_k == brute_primroot_k(p, bound, 3)


def test_primroot_agreement_below_2000():
    for p in [p for p in brute_primes(2000) if p > 2]:
        for bound in range(2, 11):
            assert primroot_escape(p, bound, 3).agree
