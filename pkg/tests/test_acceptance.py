"""Acceptance criteria, one test per criterion.

Each criterion is evaluated once into ``RESULTS``; the terminal summary hook
in conftest.py prints one PASS/FAIL line per criterion.  Run this file as a
script for the same lines without pytest.
"""
import json

import numpy as np
import pytest

from quantale_forge.actions import (check_descent, check_O_locale, invariants_and_orbit, lift_action,
                                    validate_action)
from quantale_forge.cli import CORE, MUTATIONS, load
from quantale_forge.cover import (check_cover, check_etale_covered, check_inverse_embedded, ieqf_from_cover,
                                  jstar_units_unconditional, lemma_suite, theorem_groupoid_quantale, trivial_cover)
from quantale_forge.groupoid import oquantale, validate_groupoid
from quantale_forge.hilbert import (PACKAGES, check_sheaf, self_module, sheaf_of, thm_descent_iff_inner,
                                    validate_hilbert)
from quantale_forge.locale import continuity_witness, local_homeo_witness
from quantale_forge.quantale import check_inverse_law, check_unit_laws, classify
from quantale_forge.runner import Options, file_hashes, run
from quantale_forge.suplat import adjunction_witness, chain, right_adjoint
from quantale_forge.tensor import tensor

TITLES = {
    1: "groupoid-quantale axioms",
    2: "inverse-embedded correspondence",
    3: "descent biconditionals",
    4: "orbits",
    5: "Hilbert layer",
    6: "j-lemma suite",
    7: "bilocale layer",
    8: "foundations oracles",
    9: "negative controls",
}
NAMED_GROUPOIDS = ["pair2", "pair3", "z2", "z3", "z4", "ind_z2", "ind_z3", "unit_pt", "unit_disc2", "unit_sierp"]
RESULTS: dict[int, tuple[bool, str]] = {}


class Ctx:
    """Workspaces and runner reports shared by every criterion."""

    def __init__(self):
        self.ws = load([CORE])
        self.mws = load([CORE, MUTATIONS])
        self.core_report = run(self.ws, "all", Options(seed=0), file_hashes([CORE])).as_dict(timing=False)
        self.mut_reports = [run(self.mws, "all", Options(seed=s), file_hashes([CORE, MUTATIONS])).as_dict(timing=False)
                            for s in (0, 5)]
        self.groupoids = [e for e in self.ws.of_kind("groupoid")]
        self.open_groupoids = [e for e in self.groupoids
                               if validate_groupoid(e.obj).valid and validate_groupoid(e.obj).open]
        self.covers = [e.obj for e in self.ws.of_kind("cover")]
        self.actions = [e.obj for e in self.ws.of_kind("action")]
        self.ieqfs = [ieqf_from_cover(cd) for cd in self.covers]

    def records(self, suite, name=None, report=None):
        rep = report or self.core_report
        return [r for r in rep["checks"] if r["suite"] == suite and (name is None or r["name"].startswith(name))]

    def mutations(self):
        return [e for e in self.mws.entries.values() if e.mutation]


def _verdict(problems, ok_detail):
    return (not problems, ok_detail if not problems else "; ".join(problems[:4]))


def criterion_1(c: Ctx):
    problems = []
    names = {e.name for e in c.open_groupoids}
    problems += [f"{n} missing or not open" for n in NAMED_GROUPOIDS if n not in names]
    for e in c.open_groupoids:
        G = e.obj
        Q = oquantale(G)
        cl = classify(Q)
        if not cl.groupoid_quantale:
            problems.append(f"{e.name}: not a groupoid quantale ({cl.failing})")
        if cl.inverse_quantal_frame != validate_groupoid(G).etale:
            problems.append(f"{e.name}: inverse-quantal-frame={cl.inverse_quantal_frame}")
        for chk in (check_unit_laws(Q), check_inverse_law(Q)):
            if not chk.passed:
                problems.append(f"{e.name}: {chk.name} {chk.witness}")
    problems += _mutation_problems(c)
    return _verdict(problems, f"{len(c.open_groupoids)} open groupoids classified; "
                              f"{len(c.mutations())} mutation fixtures fail with witnesses")


def _mutation_problems(c: Ctx):
    problems = []
    rep = c.mut_reports[0]
    for e in c.mutations():
        fails = [r for r in rep["checks"] if r["object"] == e.name and r["status"] == "fail"
                 and r.get("witness") is not None]
        if not fails:
            problems.append(f"mutation {e.name} has no witnessed fail")
    return problems


def criterion_2(c: Ctx):
    problems = []
    cd = c.ws["germ_ind_z2"]
    ie = check_inverse_embedded(ieqf_from_cover(cd))
    for item in "abcde":
        if not ie[f"item.{item}"].passed:
            problems.append(f"ind_z2 item ({item}) {ie[f'item.{item}'].witness}")
    ec = check_etale_covered(c.ws["ind_z2"], cd)
    for cond in ("cond1", "cond2", "cond3"):
        bad = [k for k in ec if k.name.startswith(cond) and not k.passed]
        if bad or not any(k.name.startswith(cond) for k in ec):
            problems.append(f"ind_z2 {cond} {bad[0].name if bad else 'absent'}")
    etale = [e for e in c.open_groupoids if validate_groupoid(e.obj).etale]
    for e in etale:
        out = check_cover(trivial_cover(e.obj))
        if not out.passed:
            problems.append(f"trivial cover of {e.name}: {out.first_failure().name}")
    ieqfs = c.ieqfs + [ieqf_from_cover(trivial_cover(e.obj)) for e in etale]
    for d in ieqfs:
        if not theorem_groupoid_quantale(d).passed:
            problems.append(f"theorem fails on {d.name}")
        D, Q = d.derived(), d.Qhat
        if not (D.spp == Q.spp[d.jt]).all():
            problems.append(f"{d.name}: support is not transported along j")
        if not (d.iota()[D.upsilon] == Q.L.meet[d.jt, Q.unit]).all():
            problems.append(f"{d.name}: υ differs from j(-)∧e")
    return _verdict(problems, f"items (a)-(e) and conditions (1)-(3) on ind_z2; {len(etale)} trivial covers; "
                              f"theorem on {len(ieqfs)} IEQFData")


def _hat_actions(c: Ctx, cd):
    """Corpus actions of Ĝ together with lifts of corpus G-actions."""
    out = [a for a in c.actions if a.G is cd.Ghat]
    out += [lift_action(a, cd) for a in c.actions if a.G is cd.G and cd.Ghat is not cd.G]
    return out


def criterion_3(c: Ctx):
    problems = []
    n_act = n_sheaf = 0
    for cd in c.covers:
        ieq = ieqf_from_cover(cd)
        etale = validate_groupoid(cd.Ghat).etale
        for a in _hat_actions(c, cd):
            if not validate_action(a).passed:
                continue
            n_act += 1
            dr = check_descent(a, cd).ok
            ol = check_O_locale(a, ieq).passed
            if dr != ol:
                problems.append(f"{a.name} over {cd.name}: descent={dr} O-locale={ol}")
            if etale and local_homeo_witness(a.p) is None:
                n_sheaf += 1
                t = thm_descent_iff_inner(a, ieq, cd)
                if t.incidents:
                    problems.append(f"sheaf {a.name} over {cd.name}: {t.incidents[0].witness}")
    cd = c.ws["germ_ind_z2"]
    ieq = ieqf_from_cover(cd)
    neg = c.ws["zhat2_regdisc"]
    t = thm_descent_iff_inner(neg, ieq, cd)
    if check_descent(neg, cd).ok or check_O_locale(neg, ieq).passed or t.data["descent"] or t.data["O-sheaf"]:
        problems.append("zhat2_regdisc is not negative on both sides")
    pos = c.ws["ind_z2_regular_lift"]
    if not (check_descent(pos, cd).ok and check_O_locale(pos, ieq).passed):
        problems.append("ind_z2_regular_lift is not positive on both sides")
    return _verdict(problems, f"{n_act} Ĝ-actions and {n_sheaf} Ĝ-sheaves agree; discrete regular sheaf negative, "
                              f"lifted regular action positive")


def criterion_4(c: Ctx):
    problems = []
    for a in c.actions:
        o = invariants_and_orbit(a)
        if not o.passed or o.incidents:
            problems.append(f"{a.name}: {o.first_failure() and o.first_failure().name}")
    size = invariants_and_orbit(c.ws["z2_swap"]).data["orbit_lattice_size"]
    if size != 2:
        problems.append(f"z2_swap orbit frame has {size} elements")
    return _verdict(problems, f"I_O = I_Q̂ = orbit frame on {len(c.actions)} actions; z2_swap orbit frame has 2")


def criterion_5(c: Ctx):
    problems = []
    derived_seen = 0
    mods = [(f"self O({e.name})", self_module(oquantale(e.obj))) for e in c.open_groupoids
            if validate_groupoid(e.obj).etale]
    mods += [(e.name, e.obj) for e in c.ws.of_kind("module")]
    for name, h in mods:
        pk = [p for p in PACKAGES if h.spp is not None or p not in ("supported", "stable")]
        out = validate_hilbert(h, pk)
        if not out.passed:
            problems.append(f"{name}: {out.first_failure().name}")
        derived = [k for k in out if k.name.startswith("derived.")]
        derived_seen += bool(derived)
        if h.spp is not None and h.Q.spp is not None and not derived:
            problems.append(f"{name}: derived identities not evaluated")
    sheaves = [e for e in c.ws.of_kind("module") if e.obj.action is not None]
    for e in sheaves:
        out = check_sheaf(e.obj)
        if not out.passed:
            problems.append(f"{e.name}: {out.first_failure().name}")
    for a in c.actions:
        if validate_groupoid(a.G).etale and local_homeo_witness(a.p) is None:
            out = check_sheaf(sheaf_of(a))
            if not out.passed:
                problems.append(f"sheaf of {a.name}: {out.first_failure().name}")
    return _verdict(problems, f"{len(mods)} modules validated, derived identities on {derived_seen}; "
                              f"inner product formula and sections on every sheaf")


def criterion_6(c: Ctx):
    problems = []
    for d in c.ieqfs:
        for k in lemma_suite(d):
            if k.name == "lemma.jstar-units":
                continue
            if not k.passed:
                problems.append(f"{d.name}: {k.name} {k.witness}")
        w = jstar_units_unconditional(d)
        if w is not None:
            problems.append(f"{d.name}: j_*({w[0]}) = {w[1]}")
    n = len(problems)
    ok, detail = _verdict(problems, f"every lemma on {len(c.ieqfs)} IEQFData")
    if not ok:
        detail = f"{n} violations, e.g. {detail}"
    return ok, detail


def criterion_7(c: Ctx):
    problems = []
    recs = c.records("bilocale")
    bad = [r for r in recs if r["status"] not in ("pass", "skipped")]
    problems += [f"{r['object']}: {r['name']} {r['status']}" for r in bad]
    counts = {}
    for key in ("compose.subframe-coequalizer", "tensor-agreement", "adjointness", "associativity.iso"):
        rs = [r for r in recs if r["name"] == key]
        counts[key] = len(rs)
        if not rs:
            problems.append(f"{key} never evaluated")
        problems += [f"{r['object']}: {key} {r['status']}" for r in rs if r["status"] != "pass"]
    return _verdict(problems, f"{counts['compose.subframe-coequalizer']} compositions, "
                              f"{counts['adjointness']} adjointness instances, "
                              f"{counts['associativity.iso']} composable triples")


def criterion_8(c: Ctx):
    problems = []
    maps = []
    for e in c.groupoids:
        G = e.obj
        maps += [(f"{e.name}.d", G.d), (f"{e.name}.r", G.r)]
    maps += [(f"{a.name}.p", a.p) for a in c.actions]
    maps += [(f"{cd.name}.J1", cd.J1) for cd in c.covers]
    n_gal = 0
    for name, m in maps:
        if continuity_witness(m) is not None:
            continue
        f = m.inverse_image_map()
        w = adjunction_witness(f, right_adjoint(f))
        n_gal += 1
        if w is not None:
            problems.append(f"galois {name} {w}")
    for d in c.ieqfs:
        n_gal += 1
        if adjunction_witness(d.j, d.jstar()) is not None:
            problems.append(f"galois j of {d.name}")
    up = c.records("tensor", "tensor.universal-property")
    problems += [f"{r['object']}: universal property {r['status']}" for r in up if r["status"] != "pass"]
    pid = c.records("tensor", "tensor.pullback-identification")
    guard = c.records("tensor", "tensor.guard")
    problems += [f"{r['object']}: pullback identification {r['status']}" for r in pid if r["status"] != "pass"]
    problems += [f"{r['object']}: guard {r['detail']}" for r in guard]
    n = len(tensor(chain(3), chain(3)).elements())
    if n != 6:
        problems.append(f"C3⊗C3 has {n} elements")
    return _verdict(problems, f"adjunction on {n_gal} sup-maps; universal property on {len(up)} (M,N,P); "
                              f"quotient identification on {len(pid)} anchors; C3⊗C3 = 6")


def criterion_9(c: Ctx):
    problems = _mutation_problems(c)
    a, b = c.mut_reports
    if a["exit_code"] != 1:
        problems.append(f"mutation run exits {a['exit_code']}")
    if json.dumps(a, sort_keys=True) != json.dumps(b, sort_keys=True):
        problems.append("mutation reports differ between seeds")
    inc = [r for r in c.core_report["checks"] if r["status"] == "incident"]
    problems += [f"incident {r['object']}: {r['name']}" for r in inc]
    if c.core_report["exit_code"] != 0:
        problems.append(f"core run exits {c.core_report['exit_code']}")
    return _verdict(problems, f"{len(c.mutations())} mutations fail deterministically; core run has no incident")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7, 8: criterion_8, 9: criterion_9}
# criterion 6 asks for j_*(u) = ⊥ on every partial unit of every IEQFData; this fails whenever
# j_*(e) != ⊥ (trivial covers and the germ cover of unit_sierp), so it is reported as FAIL.
KNOWN_FAILING = {6}


def line(k: int) -> str:
    ok, detail = RESULTS[k]
    return f"[{'PASS' if ok else 'FAIL'}] PRIMARY {k} {TITLES[k]}: {detail}"


@pytest.fixture(scope="module")
def ctx():
    return Ctx()


@pytest.mark.parametrize("k", sorted(CRITERIA), ids=[TITLES[k].replace(" ", "-") for k in sorted(CRITERIA)])
def test_criterion(ctx, k, request):
    if k in KNOWN_FAILING:
        request.applymarker(pytest.mark.xfail(strict=True, reason="unattainable as stated; see the ledger"))
    RESULTS[k] = CRITERIA[k](ctx)
    print(line(k))
    assert RESULTS[k][0], RESULTS[k][1]


if __name__ == "__main__":
    c = Ctx()
    for k in sorted(CRITERIA):
        RESULTS[k] = CRITERIA[k](c)
        print(line(k))
