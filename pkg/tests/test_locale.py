import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantale_forge.errors import StructuralError
from quantale_forge.locale import (CMap, FinSpace, classify_map, continuity_witness, identity_map, inclusion,
                                   opens_of, point, product, pullback, pullback_identification, quotient_space,
                                   sierpinski)
from quantale_forge.suplat import validate, verdict_lattice


def brute_opens(S):
    """Up-closed subsets, by scanning every subset."""
    out = []
    for m in range(1 << S.n):
        if all(not (m >> i & 1) or all(m >> j & 1 for j in range(S.n) if S.leq[i, j]) for i in range(S.n)):
            out.append(m)
    return out


def brute_open_map(f):
    opens_t = set(brute_opens(f.target))
    return all(f.image(u) in opens_t for u in brute_opens(f.source))


def brute_frame_open(f):
    """f* has a left adjoint f_! satisfying Frobenius reciprocity, on open sets as bitmasks."""
    So, To = brute_opens(f.source), brute_opens(f.target)

    def shriek(U):
        cands = [V for V in To if U & ~f.preimage(V) == 0]
        least = [V for V in cands if all(V & ~W == 0 for W in cands)]
        return least[0]

    return all(shriek(U & f.preimage(V)) == shriek(U) & V for U in So for V in To)


def brute_local_homeo(f):
    S = f.source
    opens_s = brute_opens(S)
    opens_t = set(brute_opens(f.target))
    for x in range(S.n):
        good = False
        for U in opens_s:
            if not U >> x & 1:
                continue
            pts = [i for i in range(S.n) if U >> i & 1]
            if len({f(i) for i in pts}) != len(pts):
                continue
            if all(f.image(V) in opens_t for V in opens_s if V & ~U == 0):
                good = True
                break
        if not good:
            return False
    return True


@st.composite
def spaces(draw, max_points=4):
    n = draw(st.integers(1, max_points))
    rel = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=5))
    pts = [f"p{i}" for i in range(n)]
    return FinSpace.from_order(pts, [(pts[a], pts[b]) for a, b in rel], name="S")


@st.composite
def maps(draw):
    S, T = draw(spaces(3)), draw(spaces(3))
    return CMap(S, T, draw(st.lists(st.integers(0, T.n - 1), min_size=S.n, max_size=S.n)))


def test_opens_of_examples():
    assert opens_of(point()).n == 2
    sq = opens_of(sierpinski())
    assert sq.n == 3 and sq.is_chain()
    assert list(sq.labels) == ["{}", "{⊤}", "{⊥,⊤}"]
    d2 = FinSpace.discrete(["0", "1"])
    assert opens_of(d2).n == 4


def test_classify_examples():
    S = sierpinski()
    f = CMap(S, point(), [0, 0])
    c = classify_map(f).flags()
    assert c["continuous"] and c["open"] and not c["local_homeo"]
    d2 = FinSpace.discrete(["0", "1"])
    c = classify_map(identity_map(d2)).flags()
    assert c["continuous"] and c["open"] and c["local_homeo"] and c["regular_open_mono"]
    top = classify_map(inclusion(S, ["⊤"])).flags()
    assert top["continuous"] and top["open"] and top["local_homeo"] and top["regular_open_mono"]
    bot = classify_map(inclusion(S, ["⊥"])).flags()
    assert bot["continuous"] and not bot["open"]


def test_open_is_localic_on_non_t0_targets():
    # the frames of a point and of an indiscrete pair are both 2, so this is an iso of locales
    f = CMap(point(), FinSpace.indiscrete(["a", "b"]), [0])
    assert not brute_open_map(f)
    assert classify_map(f).open.passed and brute_frame_open(f)


def test_discontinuous_map_flags_not_applicable():
    S = sierpinski()
    swap = CMap(S, S, [1, 0])
    mc = classify_map(swap)
    assert not mc.continuous.passed
    assert mc.continuous.witness == continuity_witness(swap)
    assert all(c.status == "skipped" for c in (mc.open, mc.local_homeo, mc.epi))


def test_pullback_examples():
    d2 = FinSpace.discrete(["0", "1"])
    P, _, _ = pullback(CMap(d2, point(), [0, 0]), CMap(d2, point(), [0, 0]))
    Q, _, _ = product(d2, d2)
    assert P.n == Q.n == 4
    S = sierpinski()
    D, p1, p2 = pullback(identity_map(S), identity_map(S))
    assert D.n == S.n and p1.fn == p2.fn
    assert (D.leq == S.leq).all()


def test_pair_groupoid_composable_pairs(core):
    G = core["pair2"]
    P, _, _ = pullback(G.d, G.r)
    assert P.n == 8 and P.is_discrete()


def test_preorder_validation():
    with pytest.raises(StructuralError):
        FinSpace(["a", "b"], [[True, True], [False, False]])
    with pytest.raises(StructuralError):
        FinSpace(["a", "a"], np.eye(2, dtype=bool))


def test_quotient_of_indiscrete_pair_is_point():
    S = FinSpace.indiscrete(["a", "b"])
    Q, q = quotient_space(S, [0, 0])
    assert Q.n == 1 and q.fn == (0, 0)


@pytest.mark.parametrize("name", ["pair2", "z3", "ind_z2", "unit_sierp", "pair_sierp"])
def test_pullback_identification_on_corpus(core, name):
    G = core[name]
    assert pullback_identification(G.d, G.r) is None


@pytest.mark.parametrize("name,limit", [("pair2", 16), ("unit_disc2", 3)])
def test_fibrewise_agrees_with_direct(core, name, limit):
    G = core[name]
    direct, small = {}, {}
    assert pullback_identification(G.d, G.r, info=direct) is None
    assert pullback_identification(G.d, G.r, limit=limit, info=small) is None
    assert direct["method"] == "direct" and small["method"] == "fibrewise"


@pytest.mark.slow
def test_pair3_identification_is_fibrewise(core):
    G = core["pair3"]
    info = {}
    assert pullback_identification(G.d, G.r, info=info) is None
    assert info["method"] == "fibrewise"


@settings(max_examples=80, deadline=None)
@given(spaces())
def test_opens_and_frame(S):
    assert sorted(S.opens()) == brute_opens(S)
    L = S.frame
    assert verdict_lattice(L).passed
    assert validate(L, "frame-distributivity").passed


@settings(max_examples=150, deadline=None)
@given(maps())
def test_classification_matches_brute_force(f):
    cont = all(f.preimage(u) in set(brute_opens(f.source)) for u in brute_opens(f.target))
    mc = classify_map(f)
    assert mc.continuous.passed == cont
    if cont:
        assert mc.open.passed == brute_frame_open(f)
        if f.source.is_t0() and f.target.is_t0():
            assert mc.open.passed == brute_open_map(f)
            assert mc.local_homeo.passed == brute_local_homeo(f)
        assert mc.epi.passed == f.is_surjective() or not f.source.is_t0() or not f.target.is_t0()
        assert all(c.status != "incident" for c in mc.crosschecks)
