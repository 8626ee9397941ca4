import itertools

import numpy as np
import pytest

from quantale_forge.cover import ieqf_from_cover
from quantale_forge.errors import UsageError
from quantale_forge.groupoid import cyclic_group, oquantale
from quantale_forge.hilbert import (PACKAGES, check_O_sheaf, check_sheaf, check_sheaf_correspondence,
                                    check_sheaf_hom, direct_image, find_basis, group_sheaves, hilbert_sections,
                                    self_module, sheaf_of, thm_descent_iff_inner, validate_hilbert, zero_module)
from quantale_forge.locale import identity_map

SHEAVES = ["sheaf_z2_swap", "sheaf_pair2_anchor", "sheaf_zhat2_regdisc", "sheaf_zhat2_trivial"]
SELF = ["self_O_z2", "self_O_z3", "self_O_pair2", "self_O_unit_disc2", "zero_O_z2"]


def brute_ip(a, xm, ym):
    """Arrows g with g·ξ in x for some ξ in y, from the action's point table."""
    m = 0
    for k, (g, xi) in enumerate(a.GX.coords):
        if ym >> xi & 1 and xm >> a.act.fn[k] & 1:
            m |= 1 << g
    return m


@pytest.mark.parametrize("name", SHEAVES)
def test_sheaf_inner_product_brute(core, name):
    h = core[name]
    a = h.action
    LG = a.G.G1.frame
    for i, xm in enumerate(h.X.masks):
        for j, ym in enumerate(h.X.masks):
            assert LG.masks[h.ip[i, j]] == brute_ip(a, xm, ym)


def test_swap_inner_product_values(core):
    h = core["sheaf_z2_swap"]
    X, Q = h.X, h.Q
    ip = lambda x, y: Q.label(h.ip[X[x], X[y]])
    assert ip("{a}", "{a}") == "{e}"
    assert ip("{a}", "{b}") == "{g}"
    assert ip("{a,b}", "{a,b}") == "{e,g}"
    assert ip("{}", "{a,b}") == "{}"


@pytest.mark.parametrize("name", SHEAVES + SELF)
def test_examples_validate(core, name):
    h = core[name]
    pk = [p for p in PACKAGES if p not in ("supported", "stable") or h.spp is not None]
    out = validate_hilbert(h, pk)
    assert out.passed, out.first_failure()
    assert not out.incidents


@pytest.mark.parametrize("name", SHEAVES)
def test_sheaf_formula_and_sections(core, name):
    out = check_sheaf(core[name])
    assert out.passed, out.first_failure()


def test_swap_sections(core):
    h = core["sheaf_z2_swap"]
    hs, ls = hilbert_sections(h)
    assert hs == ls
    assert sorted(h.X.label(s) for s in hs) == ["{a}", "{b}", "{}"]
    # one free orbit: a single point generates, since g·{a} = {b}
    assert [h.X.label(s) for s in find_basis(h)] in (["{a}"], ["{b}"])


def test_self_module_inner_product():
    Q = oquantale(cyclic_group(3))
    h = self_module(Q)
    for a, b in itertools.product(range(Q.n), repeat=2):
        assert h.ip[a, b] == Q.mult[a, Q.inv[b]]


def test_symmetry_mutation():
    h = self_module(oquantale(cyclic_group(2)))
    ip = h.ip.copy()
    Q = h.Q
    x, y = Q["{e}"], Q["{g}"]
    ip[x, y] = Q["{e,g}"]
    out = validate_hilbert(h.replace(ip=ip), ["pre-hilbert"])
    assert not out.passed and not out.incidents


def test_degenerate_inner_product():
    h = self_module(oquantale(cyclic_group(2)))
    ip = np.full_like(h.ip, h.Q.L.bottom)
    out = validate_hilbert(h.replace(ip=ip), ["hilbert"])
    assert out["hilbert.non-degenerate"].status == "fail"


def test_zero_module():
    Q = oquantale(cyclic_group(2))
    assert validate_hilbert(zero_module(Q)).passed


def test_unknown_package():
    with pytest.raises(UsageError):
        validate_hilbert(zero_module(oquantale(cyclic_group(2))), ["nope"])


def test_sheaf_of_needs_etale(core):
    with pytest.raises(UsageError):
        sheaf_of(core["ind_z2_regular"])


@pytest.mark.parametrize("name,expected", [("zhat2_regdisc", False), ("zhat2_trivial", True)])
def test_descent_iff_inner(core, name, expected):
    cd = core["germ_ind_z2"]
    out = thm_descent_iff_inner(core[name], ieqf_from_cover(cd), cd)
    assert not out.incidents
    assert out.data["descent"] is expected and out.data["O-sheaf"] is expected


def test_lift_on_indiscrete_carrier_is_not_a_sheaf(core):
    with pytest.raises(UsageError, match="local homeomorphism"):
        sheaf_of(core["ind_z2_regular_lift"])


def test_O_sheaf_witness(core):
    cd = core["germ_ind_z2"]
    out = check_O_sheaf(core["sheaf_zhat2_regdisc"], ieqf_from_cover(cd))
    assert not out.passed and len(out.first_failure().witness) == 3


def involutions(n):
    return sum(1 for p in itertools.permutations(range(n)) if all(p[p[i]] == i for i in range(n)))


def test_group_sheaves_count():
    G = cyclic_group(2)
    assert len(group_sheaves(G, 3)) == sum(involutions(n) for n in (1, 2, 3))
    G3 = cyclic_group(3)
    cubes = lambda n: sum(1 for p in itertools.permutations(range(n))
                          if all(p[p[p[i]]] == i for i in range(n)))
    assert len(group_sheaves(G3, 3)) == sum(cubes(n) for n in (1, 2, 3))


@pytest.mark.parametrize("cover", ["germ_ind_z2", "germ_ind_z3"])
def test_sheaf_correspondence(core, cover):
    cd = core[cover]
    out = check_sheaf_correspondence(cd, ieqf_from_cover(cd), max_points=2)
    assert out.passed and out.data["descended"] == out.data["O-sheaves"]


def test_sheaf_hom(core):
    h = core["sheaf_z2_swap"]
    f = direct_image(identity_map(h.action.X), h, h)
    assert check_sheaf_hom(f, h, h).passed
