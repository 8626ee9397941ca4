import pytest

from quantale_forge.actions import (GAction, act_inverse_image, anchor_action, check_act_inverse_image,
                                    check_descent, check_equivariant, check_O_locale, group_action,
                                    invariants_and_orbit, lift_action, make_action, module_of, regular_action,
                                    validate_action)
from quantale_forge.cover import germ_cover, ieqf_from_cover, ieqf_identity, trivial_cover
from quantale_forge.groupoid import cyclic_group, oquantale, pair_groupoid
from quantale_forge.locale import CMap, FinSpace, identity_map

ACTIONS = ["pair2_anchor", "pair2_regular", "ind_z2_regular", "ind_z2_regular_lift", "zhat2_regdisc",
           "zhat2_trivial", "ind_z3_anchor", "unit_sierp_anchor", "z2_swap", "z3_rotate"]


def brute_invariants(a):
    """Open sets U with g·x in U for every x in U."""
    out = []
    for U in a.X.opens():
        if all(not (U >> x & 1) or U >> a.act.fn[k] & 1 for k, (g, x) in enumerate(a.GX.coords)):
            out.append(a.X.set_label(U))
    return sorted(out)


@pytest.fixture(scope="module")
def swap():
    G = cyclic_group(2)
    X = FinSpace.discrete(["a", "b"])
    return group_action(G, X, {"e": {"a": "a", "b": "b"}, "g": {"a": "b", "b": "a"}}, name="swap")


def test_validate_examples(swap):
    G = pair_groupoid(2)
    assert validate_action(anchor_action(G)).passed
    assert validate_action(swap).passed


def test_unitarity_mutation(corpus):
    out = validate_action(corpus["z2_swap_broken"])
    assert not out.passed
    f = out.first_failure()
    assert f.name == "action.associativity" and f.witness == ("g", "g", "b")


def test_unitarity_witness():
    G = cyclic_group(2)
    X = FinSpace.discrete(["a", "b"])
    a = make_action(G, X, [0, 0], {("e", "a"): "b", ("e", "b"): "b", ("g", "a"): "a", ("g", "b"): "a"})
    out = validate_action(a)
    assert out["action.unitarity"].witness == ("a",)


def test_act_inverse_image_swap(swap):
    m = module_of(swap)
    x = m.X["{a}"]
    r = act_inverse_image(swap, x, m)
    T = r["tensor"]
    Q = m.Q
    want = T.join2(T.pure([Q["{e}"], m.X["{a}"]]), T.pure([Q["{g}"], m.X["{b}"]]))
    assert r["general"] == want == r["partial-units"]
    assert act_inverse_image(swap, m.X.bottom, m)["general"] == T.bottom
    assert act_inverse_image(swap, m.X.top, m)["general"] == T.top


def test_lift_along_trivial_cover_is_identity(swap):
    cd = trivial_cover(swap.G)
    la = lift_action(swap, cd)
    assert la.act.fn == swap.act.fn and la.p.fn == swap.p.fn


def test_lift_ind_z2_regular(core):
    a = core["ind_z2_regular"]
    cd = core["germ_ind_z2"]
    la = lift_action(a, cd)
    assert la.G is cd.Ghat and la.X is a.X
    assert validate_action(la).passed
    back = check_descent(la, cd)
    assert back.ok and back.action.act.fn == a.act.fn


def test_regular_discrete_sheaf_does_not_descend(core):
    cd = core["germ_ind_z2"]
    r = check_descent(core["zhat2_regdisc"], cd)
    assert not r.ok and r.witness[0] == "β not continuous"
    assert not check_O_locale(core["zhat2_regdisc"], ieqf_from_cover(cd)).passed


def test_O_locale_examples(core):
    cd = core["germ_ind_z2"]
    ieq = ieqf_from_cover(cd)
    assert check_O_locale(core["ind_z2_regular_lift"], ieq).passed
    # trivial embedding j = id: every module is an O-locale
    Q = oquantale(cyclic_group(2))
    swap_mod = module_of(core["z2_swap"], Q)
    assert check_O_locale(swap_mod, ieqf_identity(Q)).passed


def test_invariants_examples(swap, core):
    o = invariants_and_orbit(swap)
    assert o.passed
    assert o.data["invariant_labels"] == ["{}", "{a,b}"]
    assert o.data["orbit_lattice_size"] == 2
    G = cyclic_group(1)
    X = FinSpace.discrete(["a", "b", "c"])
    triv = group_action(G, X, {"e": {p: p for p in X.points}})
    assert invariants_and_orbit(triv).data["orbit_lattice_size"] == 8
    o = invariants_and_orbit(anchor_action(pair_groupoid(2)))
    assert o.data["invariant_labels"] == ["{}", "{0,1}"]


@pytest.mark.parametrize("name", ACTIONS)
def test_invariants_match_brute_force(core, name):
    a = core[name]
    o = invariants_and_orbit(a)
    assert not o.incidents
    assert sorted(o.data["invariant_labels"]) == brute_invariants(a)
    assert o.data["orbit_space"].frame.n == len(o.data["invariant_labels"])


@pytest.mark.parametrize("name", ACTIONS)
def test_inverse_image_agreement(core, name):
    assert all(c.passed for c in check_act_inverse_image(core[name]))


def test_equivariant_examples(swap):
    X = swap.X
    assert check_equivariant(identity_map(X), swap, swap).passed
    flip = CMap(X, X, [1, 0], name="flip")
    assert check_equivariant(flip, swap, swap).passed
    const = CMap(X, X, [0, 0], name="const")
    out = check_equivariant(const, swap, swap)
    assert not out.passed and not out.incidents
    assert out["equivariant.G"].witness == ("g", "a")
