import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantale_forge.errors import UsageError
from quantale_forge.groupoid import cyclic_group, oquantale, pair_groupoid
from quantale_forge.quantale import (check_inverse_law, check_multiplicative, check_unit_laws, classify,
                                     one_element, partial_units, partial_units_cover, right_sided,
                                     validate_quantale)


@pytest.fixture(scope="module")
def O_pair2():
    return oquantale(pair_groupoid(2))


@pytest.fixture(scope="module")
def O_ind_z2():
    return oquantale(cyclic_group(2, indiscrete=True))


@pytest.fixture(scope="module")
def O_z2():
    return oquantale(cyclic_group(2))


def labels(Q, ids):
    return sorted(Q.label(i) for i in ids)


def test_validate_examples(O_pair2, O_ind_z2):
    assert validate_quantale(O_pair2).passed
    assert validate_quantale(O_ind_z2, ["supported", "equivariant"]).passed
    with pytest.raises(UsageError):
        validate_quantale(O_pair2, ["bogus"])


def test_constant_top_involution_fails(O_z2):
    Q = O_z2.replace(inv=np.full(O_z2.n, O_z2.one))
    out = validate_quantale(Q, ["involutive"])
    f = out.first_failure()
    assert f is not None and f.name.startswith("involutive")
    assert f.witness is not None


def test_right_sided_examples(O_ind_z2, O_z2):
    assert labels(O_ind_z2, right_sided(O_ind_z2)) == labels(O_ind_z2, [O_ind_z2.L.bottom, O_ind_z2.one])
    assert labels(O_z2, right_sided(O_z2)) == ["{e,g}", "{}"]
    Q1 = one_element()
    assert right_sided(Q1) == [Q1.L.bottom]


def test_partial_units_examples(O_pair2, O_z2):
    I = partial_units(O_pair2)
    assert len(I) == 7
    # brute force: subsets of arrows that are partial bijections
    arrows = [(x, y) for x in range(2) for y in range(2)]
    brute = []
    for a in range(O_pair2.n):
        rel = [arrows[k] for k in range(4) if O_pair2.L.masks[a] >> k & 1]
        if len({x for x, _ in rel}) == len(rel) == len({y for _, y in rel}):
            brute.append(a)
    assert sorted(I) == sorted(brute)
    assert partial_units_cover(O_pair2).passed
    assert labels(O_z2, partial_units(O_z2)) == ["{e}", "{g}", "{}"]
    Q1 = one_element()
    if Q1.unit is not None:
        assert partial_units(Q1) == [Q1.L.bottom]


def test_unit_and_inverse_laws(O_pair2, O_ind_z2):
    for Q in (O_pair2, O_ind_z2):
        assert check_unit_laws(Q).passed
        assert check_inverse_law(Q).passed
        assert check_multiplicative(Q).passed
    Q1 = one_element()
    assert check_multiplicative(Q1).passed


def test_unit_laws_fail_with_constant_upsilon(O_pair2):
    Q = O_pair2.replace(upsilon=np.full(O_pair2.n, O_pair2.B.bottom))
    c = check_unit_laws(Q)
    assert not c.passed
    # the first failing element in id order is the first non-bottom element
    first = next(a for a in range(Q.n) if a != Q.L.bottom)
    assert c.witness[0] == Q.label(first)


def test_classify_examples(O_pair2, O_ind_z2, O_z2):
    c = classify(O_pair2)
    assert c.groupoid_quantale and c.inverse_quantal_frame
    c = classify(O_ind_z2)
    assert c.groupoid_quantale and not c.inverse_quantal_frame
    assert c.failing == "no designated unit"
    c = classify(O_z2)
    assert c.groupoid_quantale and c.inverse_quantal_frame


MUTANTS = {
    "O_z2_badmul": "quantale.joins-left",
    "O_z2_badinv": "involutive.anti",
    "O_z2_badunit": "quantale.unit",
    "O_pair2_badspp": "supported.sup-map",
}


@pytest.mark.parametrize("name", sorted(MUTANTS))
def test_mutants_fail_with_witness(corpus, name):
    cl = classify(corpus[name])
    assert not (cl.groupoid_quantale and cl.inverse_quantal_frame)
    fails = {c.name: c for c in cl.outcome.failures}
    assert MUTANTS[name] in fails
    assert fails[MUTANTS[name]].witness is not None
    again = classify(corpus[name].replace())
    assert [c.as_dict() for c in again.outcome.failures] == [c.as_dict() for c in cl.outcome.failures]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["pair2", "z3", "unit_sierp"]), st.data())
def test_multiplication_preserves_joins(core, name, data):
    Q = oquantale(core[name])
    a, b, c = (data.draw(st.integers(0, Q.n - 1)) for _ in range(3))
    j = Q.L.join[b, c]
    assert Q.mul(a, j) == Q.L.join[Q.mul(a, b), Q.mul(a, c)]
    assert Q.mul(j, a) == Q.L.join[Q.mul(b, a), Q.mul(c, a)]
    assert Q.mul(Q.mul(a, b), c) == Q.mul(a, Q.mul(b, c))
    assert Q.star(Q.mul(a, b)) == Q.mul(Q.star(b), Q.star(a))
