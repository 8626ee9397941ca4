import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantale_forge.errors import CapacityError, StructuralError
from quantale_forge.suplat import (SupMap, all_supmaps, chain, constant, dual, find_isomorphism, identity, powerset,
                                   small_lattices)
from quantale_forge.tensor import (action_witness, all_bimorphisms, bimorphism_witness, map_tensor, pairing,
                                   tensor, tensor_injective, tensor_over_base, universal_property_witness)


def brute_bi_ideals(M, N):
    """Count bi-ideals of M×N by scanning every subset of the product."""
    cells = [(x, y) for x in range(M.n) for y in range(N.n)]
    count = 0
    for bits in range(1 << len(cells)):
        D = {c for k, c in enumerate(cells) if bits >> k & 1}
        if not all((x, N.bottom) in D for x in range(M.n)) or not all((M.bottom, y) in D for y in range(N.n)):
            continue
        if any((a, b) not in D for (x, y) in D for a in range(M.n) for b in range(N.n)
               if M.leq[a, x] and N.leq[b, y]):
            continue
        if any((M.join[x1, x2], y) not in D for (x1, y) in D for (x2, y2) in D if y2 == y):
            continue
        if any((x, N.join[y1, y2]) not in D for (x, y1) in D for (x2, y2) in D if x2 == x):
            continue
        count += 1
    return count


def test_c3_tensor_c3_has_six_elements():
    assert len(tensor(chain(3), chain(3)).elements()) == 6
    assert brute_bi_ideals(chain(3), chain(3)) == 6


@pytest.mark.parametrize("M", small_lattices(4), ids=lambda L: L.name)
@pytest.mark.parametrize("N", small_lattices(3), ids=lambda L: L.name)
def test_size_matches_bi_ideal_count(M, N):
    assert len(tensor(M, N).elements()) == brute_bi_ideals(M, N)


@pytest.mark.parametrize("M", small_lattices(4), ids=lambda L: L.name)
@pytest.mark.parametrize("N", small_lattices(4), ids=lambda L: L.name)
def test_size_matches_maps_into_dual(M, N):
    # M⊗N is anti-isomorphic to the sup-maps M -> N^op
    assert len(tensor(M, N).elements()) == len(all_supmaps(M, dual(N)))


def test_unit_and_degenerate_factors():
    N = powerset(["a", "b"])
    T = tensor(chain(2), N)
    L = T.as_suplattice()
    assert find_isomorphism(L, N) is not None
    # ⊤⊗n has exactly the position of n
    for y in range(N.n):
        assert T.pure([1, y]) == T.pure([1, y])
    assert sorted(T.pure([1, y]) for y in range(N.n)) == sorted(T.elements())
    assert len(tensor(chain(1), N).elements()) == 1


def test_pure_tensors_are_bilinear():
    M, N = chain(3), powerset(["a", "b"])
    T = tensor(M, N)
    for x1, x2, y in itertools.product(range(M.n), range(M.n), range(N.n)):
        assert T.pure([M.join[x1, x2], y]) == T.join2(T.pure([x1, y]), T.pure([x2, y]))
    for x in range(M.n):
        assert T.pure([x, N.bottom]) == T.bottom


def test_universal_property_small():
    for M in small_lattices(4):
        for N in small_lattices(4):
            assert universal_property_witness(M, N, chain(2)) is None
    for M in small_lattices(3):
        for N in small_lattices(3):
            assert universal_property_witness(M, N, chain(3)) is None


@pytest.mark.slow
def test_universal_property_three_element_target():
    for M in small_lattices(4):
        for N in small_lattices(4):
            assert universal_property_witness(M, N, chain(3)) is None


def test_bimorphism_witness_and_enumeration():
    C = chain(2)
    P = powerset(["a", "b"])
    bims = all_bimorphisms(C, C, P)
    # a bimorphism 2×2→P is fixed by the value at (⊤,⊤)
    assert len(bims) == P.n
    bad = np.array([[0, 0], [0, 0]])
    bad[1, 1] = 0
    bad[0, 1] = 1
    assert bimorphism_witness(C, C, P, bad) is not None
    with pytest.raises(CapacityError):
        all_bimorphisms(chain(4), chain(4), chain(4), limit=10)


def test_map_tensor_identity_and_constant():
    M, N = chain(3), powerset(["a", "b"])
    T = tensor(M, N)
    f = map_tensor([identity(M), identity(N)], T, T)
    assert all(f(e) == e for e in T.elements())
    z = map_tensor([SupMap(M, M, [M.bottom] * M.n), identity(N)], T, T)
    assert all(z(e) == T.bottom for e in T.elements())
    ok, _ = tensor_injective(f)
    assert ok
    ok, w = tensor_injective(z)
    assert not ok and w is not None
    with pytest.raises(StructuralError):
        map_tensor([identity(M)], T, T)


def test_pairing_with_top_projects():
    M = powerset(["a", "b"])
    N = chain(3)
    T = tensor(M, N)
    p = pairing(lambda x: x, lambda y: M.top, T, M)
    for x in range(M.n):
        assert p(T.pure([x, N.top])) == x


def test_tensor_over_trivial_base_is_plain_tensor():
    M, N = powerset(["a", "b"]), chain(3)
    B = chain(2)
    ract = np.array([[M.bottom, x] for x in range(M.n)])
    lact = np.array([[N.bottom] * N.n, list(range(N.n))])
    assert action_witness(M, B, ract, "right") is None
    assert action_witness(N, B, lact, "left") is None
    Tb = tensor_over_base(M, N, B, ract, lact)
    assert len(Tb.elements()) == len(tensor(M, N).elements())


def test_tensor_over_base_restriction_to_e():
    # B = ↓{e} in P{e,g} acting by multiplication in the group quantale of Z/2:
    # restriction to ⊥ or the identity, so the exchange congruence is trivial
    P = powerset(["e", "g"])
    B = chain(2)
    ract = np.array([[P.bottom, x] for x in range(P.n)])
    lact = ract.T.copy()
    Tb = tensor_over_base(P, P, B, ract, lact)
    assert sorted(Tb.elements()) == sorted(tensor(P, P).elements())


def test_tensor_over_disjoint_base_collapses_mismatched_pairs():
    # B = P{0,1}, M = N = P{0,1} acting by intersection: M⊗_B N ≅ B
    P = powerset(["0", "1"])
    act = P.meet.copy()
    assert action_witness(P, P, act, "right") is None
    Tb = tensor_over_base(P, P, P, act, act)
    assert find_isomorphism(Tb.as_suplattice(), P) is not None


def test_action_witness_reports_unit_failure():
    P = powerset(["0", "1"])
    act = P.meet.copy()
    act[P["{0}"], P.top] = P.bottom
    assert action_witness(P, P, act, "right")[0] == "unit"


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(small_lattices(4)), st.sampled_from(small_lattices(4)), st.data())
def test_tensor_order_is_inclusion_of_closed_sets(M, N, data):
    T = tensor(M, N)
    els = T.elements()
    a, b = data.draw(st.sampled_from(els)), data.draw(st.sampled_from(els))
    j = T.join2(a, b)
    assert T.le(a, j) and T.le(b, j)
    assert all(not (T.le(a, c) and T.le(b, c)) or T.le(j, c) for c in els)
    assert T.meet2(a, b) == a & b
