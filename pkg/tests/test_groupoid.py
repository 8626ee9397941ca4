import itertools

import pytest

from quantale_forge.errors import StructuralError, UsageError
from quantale_forge.groupoid import (cyclic_group, groupoid_from_tables, mult_table, opposite, oquantale,
                                     pair_groupoid, pair_sierpinski, unit_groupoid, validate_groupoid,
                                     z2_on_sierpinski)
from quantale_forge.locale import FinSpace, point, sierpinski
from quantale_forge.quantale import classify, validate_quantale

OPEN_CORPUS = ["pair2", "pair3", "z2", "z3", "z4", "ind_z2", "ind_z3", "unit_pt", "unit_disc2", "unit_sierp"]
ETALE = {"pair2", "pair3", "z2", "z3", "z4", "unit_pt", "unit_disc2", "unit_sierp"}


def test_pair2_is_etale():
    r = validate_groupoid(pair_groupoid(2))
    assert r.valid and r.open and r.etale


def test_ind_z2_open_not_etale():
    r = validate_groupoid(cyclic_group(2, indiscrete=True))
    assert r.valid and r.open and not r.etale


def test_z2_on_sierpinski_multiplication_discontinuous():
    r = validate_groupoid(z2_on_sierpinski())
    assert not r.valid
    c = r.outcome["groupoid.continuous.m"]
    assert c.witness == ("(g,g)", "{g}")


def test_pair_sierpinski_is_open():
    r = validate_groupoid(pair_sierpinski())
    assert r.valid and r.open


def test_oquantale_ind_z2_has_no_unit():
    Q = oquantale(cyclic_group(2, indiscrete=True))
    assert Q.n == 2 and Q.unit is None
    assert Q.mul(Q.one, Q.one) == Q.one
    assert "not open" in Q.notes["unit"]


def test_oquantale_unit_sierp_is_meet():
    Q = oquantale(unit_groupoid(sierpinski()))
    assert Q.n == 3 and Q.L.is_chain()
    for a, b in itertools.product(range(Q.n), repeat=2):
        assert Q.mul(a, b) == Q.L.meet[a, b]
    assert all(Q.star(a) == a for a in range(Q.n))


def test_oquantale_rejects_non_open():
    with pytest.raises(UsageError):
        oquantale(z2_on_sierpinski())
    with pytest.raises(UsageError):
        oquantale(pair_groupoid(2), "x")


@pytest.mark.parametrize("n", [2, 3])
def test_pair_product_matches_relation_composition(n):
    G = pair_groupoid(n)
    Q = oquantale(G)
    arrows = [(x, y) for x in range(n) for y in range(n)]

    def rel(mask):
        return {arrows[k] for k in range(len(arrows)) if mask >> k & 1}

    for a, b in itertools.product(range(Q.n), repeat=2):
        want = {(x, z) for (x, y) in rel(Q.L.masks[a]) for (y2, z) in rel(Q.L.masks[b]) if y == y2}
        assert rel(Q.L.masks[Q.mul(a, b)]) == want


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cyclic_product_is_sumset(n):
    Q = oquantale(cyclic_group(n))
    for a, b in itertools.product(range(Q.n), repeat=2):
        A = {k for k in range(n) if Q.L.masks[a] >> k & 1}
        B = {k for k in range(n) if Q.L.masks[b] >> k & 1}
        got = {k for k in range(n) if Q.L.masks[Q.mul(a, b)] >> k & 1}
        assert got == {(x + y) % n for x in A for y in B}


def test_opposite_convention_reverses_products():
    G = pair_groupoid(2)
    Qr, Qd = oquantale(G, "r"), oquantale(G, "d")
    assert Qr.L.labels == Qd.L.labels
    for a, b in itertools.product(range(Qr.n), repeat=2):
        assert Qd.mul(a, b) == Qr.mul(b, a)
    assert validate_quantale(Qd).passed


def test_opposite_is_an_involution():
    G = pair_groupoid(2)
    assert mult_table(opposite(opposite(G))) == mult_table(G)


def test_groupoid_from_tables_rejects_bad_products():
    G0, G1 = point(), FinSpace.discrete(["e", "g"])
    d = r = {"e": "*", "g": "*"}
    mult = {("e", "e"): "e", ("e", "g"): "g", ("g", "e"): "g", ("g", "g"): "e"}
    G = groupoid_from_tables(G0, G1, d, r, mult, {"e": "e", "g": "g"}, {"*": "e"}, name="z2t")
    assert validate_groupoid(G).valid
    bad = dict(mult)
    del bad[("g", "g")]
    with pytest.raises(StructuralError):
        groupoid_from_tables(G0, G1, d, r, bad, {"e": "e", "g": "g"}, {"*": "e"})
    wrong = {**mult, ("g", "g"): "g"}
    G2 = groupoid_from_tables(G0, G1, d, r, wrong, {"e": "e", "g": "g"}, {"*": "e"}, name="bad")
    assert not validate_groupoid(G2).valid


@pytest.mark.parametrize("name", OPEN_CORPUS)
def test_corpus_classification(core, name):
    G = core[name]
    r = validate_groupoid(G)
    assert r.valid and r.open
    assert r.etale == (name in ETALE)
    cl = classify(oquantale(G))
    assert cl.groupoid_quantale
    assert cl.inverse_quantal_frame == (name in ETALE)
