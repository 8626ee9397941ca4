"""Check orchestration over a workspace and the machine/human reports.

Every check is keyed by (suite, object, check name); the report is sorted on
that key before emission so that object processing order (which ``seed``
shuffles) never shows up in the output.
"""
from __future__ import annotations

import fnmatch
import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import actions as act_mod
from . import bilocale as bl_mod
from . import hilbert as hil_mod
from .checks import FAIL, INCIDENT, PASS, SKIPPED, Check, failed, incident, passed, skipped, verdict
from .cover import check_cover, coverability, ieqf_from_cover
from .errors import CapacityError, QFError, StructuralError, UsageError
from .groupoid import oquantale, validate_groupoid
from .locale import classify_map, continuity_witness, pullback_identification
from .qfformat import Workspace
from .quantale import classify
from .suplat import adjunction_witness, chain, small_lattices, right_adjoint, validate, verdict_lattice
from .tensor import tensor, universal_property_witness

SUITES = ("suplat", "tensor", "locale", "quantale", "groupoid", "cover", "actions", "hilbert", "bilocale")
REPORT_FORMAT = "qf-report 1"
EXIT_OK, EXIT_FAIL, EXIT_INCIDENT, EXIT_USAGE = 0, 1, 2, 3
DEFAULT_MAX_SIZE = 1024


@dataclass
class Options:
    only: str | None = None
    max_size: int = DEFAULT_MAX_SIZE
    convention: str = "r"
    seed: int = 0


@dataclass
class Report:
    suites: list[str]
    records: list[dict] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def add(self, suite: str, obj: str, c: Check) -> None:
        rec = {"suite": suite, "object": obj}
        rec.update(c.as_dict())
        self.records.append(rec)

    def sorted_records(self) -> list[dict]:
        return sorted(self.records, key=lambda r: (r["suite"], r["object"], r["name"],
                                                   json.dumps(r.get("witness"), sort_keys=True)))

    def counts(self) -> dict:
        out = {PASS: 0, FAIL: 0, INCIDENT: 0, SKIPPED: 0}
        for r in self.records:
            out[r["status"]] += 1
        return out

    @property
    def exit_code(self) -> int:
        c = self.counts()
        if c[INCIDENT]:
            return EXIT_INCIDENT
        if c[FAIL]:
            return EXIT_FAIL
        return EXIT_OK

    def as_dict(self, timing: bool = True) -> dict:
        out = {"format": REPORT_FORMAT, "suites": self.suites, "checks": self.sorted_records(),
               "counts": self.counts(), "exit_code": self.exit_code, "data": self.data, "inputs": self.inputs}
        if timing:
            out["timing"] = self.timing
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.as_dict(timing), sort_keys=True, indent=1, ensure_ascii=False) + "\n"

    def summary(self) -> str:
        c = self.counts()
        lines = [f"suites: {', '.join(self.suites)}",
                 f"checks: {len(self.records)}  pass {c[PASS]}  fail {c[FAIL]}  incident {c[INCIDENT]}  "
                 f"skipped {c[SKIPPED]}"]
        for r in self.sorted_records():
            if r["status"] in (FAIL, INCIDENT):
                w = r.get("witness")
                lines.append(f"  {r['status'].upper():8} {r['suite']}/{r['object']}: {r['name']}"
                             + ("" if w is None else f"  witness {json.dumps(w, ensure_ascii=False)}"))
        lines.append(f"exit code {self.exit_code}")
        return "\n".join(lines) + "\n"


def file_hashes(paths) -> dict:
    return {Path(p).name: hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in paths}


# -- orchestration ------------------------------------------------------------------------

def run(ws: Workspace, suite: str = "all", opts: Options | None = None, inputs: dict | None = None) -> Report:
    opts = opts or Options()
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    if opts.convention not in ("r", "d"):
        raise UsageError(f"unknown convention {opts.convention!r}")
    suites = list(SUITES) if suite == "all" else [suite]
    rep = Report(suites, inputs=dict(inputs or {}))
    for s in suites:
        t = time.perf_counter()
        _SUITE_FN[s](ws, rep, opts)
        rep.timing[s] = round(time.perf_counter() - t, 3)
    return rep


def _entries(ws: Workspace, kind: str, opts: Options):
    es = [e for e in ws.of_kind(kind) if opts.only is None or fnmatch.fnmatchcase(e.name, opts.only)]
    random.Random(opts.seed).shuffle(es)
    return es


def _guarded(rep: Report, suite: str, name: str, fn) -> None:
    """Run ``fn`` returning checks; usage and capacity problems skip, structural ones fail."""
    try:
        for c in fn():
            rep.add(suite, name, c)
    except (CapacityError, UsageError) as exc:
        rep.add(suite, name, skipped(f"{suite}.guard", str(exc)))
    except StructuralError as exc:
        w = getattr(exc, "witness", None)
        rep.add(suite, name, failed(f"{suite}.structure", w if w else str(exc)))


def _data(rep: Report, suite: str, name: str, value) -> None:
    rep.data.setdefault(suite, {})[name] = value


def _suplat(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "space", opts):
        def f(S=e.obj):
            L = S.frame
            return [verdict_lattice(L), validate(L, "frame-distributivity")]
        _guarded(rep, "suplat", e.name, f)
    for e in _entries(ws, "quantale", opts):
        def f(Q=e.obj):
            if Q.n > opts.max_size:
                return [skipped("suplattice", f"carrier has {Q.n} > {opts.max_size} elements")]
            out = [verdict_lattice(Q.L)]
            if Q.based is not None:
                out.append(Check("base." + verdict_lattice(Q.B).name, verdict_lattice(Q.B).status,
                                 verdict_lattice(Q.B).witness))
            return out
        _guarded(rep, "suplat", e.name, f)
    for e in _entries(ws, "groupoid", opts):
        def f(G=e.obj):
            out = []
            for nm, m in (("d", G.d), ("r", G.r)):
                if continuity_witness(m) is not None:
                    out.append(skipped(f"galois.{nm}", "map is not continuous"))
                    continue
                fs = m.inverse_image_map()
                c = validate(fs, "supmap")
                out.append(Check(f"inverse-image.{nm}.{c.name}", c.status, c.witness))
                g = right_adjoint(fs)
                out.append(verdict(f"galois.{nm}", adjunction_witness(fs, g)))
            return out
        _guarded(rep, "suplat", e.name, f)


def _tensor(ws: Workspace, rep: Report, opts: Options) -> None:
    if opts.only is None or fnmatch.fnmatchcase("C3xC3", opts.only):
        n = len(tensor(chain(3), chain(3)).elements())
        rep.add("tensor", "C3xC3", passed("tensor.size", "6 elements") if n == 6 else
                failed("tensor.size", (n,)))
    for M in small_lattices(4):
        for N in small_lattices(4):
            key = f"{M.name}x{N.name}"
            if opts.only is not None and not fnmatch.fnmatchcase(key, opts.only):
                continue
            for P in (chain(2), chain(3)):
                _guarded(rep, "tensor", key, lambda M=M, N=N, P=P: [
                    verdict(f"tensor.universal-property[{P.name}]", universal_property_witness(M, N, P))])
    for e in _entries(ws, "groupoid", opts):
        def f(G=e.obj):
            if not validate_groupoid(G).open:
                return [skipped("tensor.pullback-identification", "groupoid is not open")]
            return [_pid(G.d, G.r)]
        _guarded(rep, "tensor", e.name, f)
    for e in _entries(ws, "action", opts):
        def f(a=e.obj):
            if not validate_groupoid(a.G).open:
                return [skipped("tensor.pullback-identification", "groupoid is not open")]
            return [_pid(a.G.d, a.p)]
        _guarded(rep, "tensor", e.name, f)


def _pid(f, g) -> Check:
    info = {}
    w = pullback_identification(f, g, info=info)
    return passed("tensor.pullback-identification", info["method"]) if w is None else \
        incident("tensor.pullback-identification", w, "spatial pullback and tensor over the base disagree")


def _locale(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "groupoid", opts):
        def f(G=e.obj, name=e.name):
            out, flags = [], {}
            for nm, m in (("d", G.d), ("r", G.r), ("m", G.m), ("i", G.i), ("u", G.u)):
                mc = classify_map(m)
                c = mc.continuous
                out.append(Check(f"map.{nm}.continuous", c.status, c.witness))
                out += [Check(f"map.{nm}.{x.name}", x.status, x.witness, x.detail) for x in mc.crosschecks
                        if x.status == INCIDENT]
                flags[nm] = {k: v for k, v in mc.flags().items()}
            _data(rep, "locale", name, flags)
            return out
        _guarded(rep, "locale", e.name, f)
    for e in _entries(ws, "action", opts):
        def f(a=e.obj):
            return [verdict("anchor.continuous", continuity_witness(a.p)),
                    verdict("act.continuous", continuity_witness(a.act))]
        _guarded(rep, "locale", e.name, f)


def _quantale(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "quantale", opts):
        def f(Q=e.obj, name=e.name):
            if Q.n > opts.max_size:
                return [skipped("classify", f"carrier has {Q.n} > {opts.max_size} elements")]
            cl = classify(Q)
            out = list(cl.outcome.checks)
            _data(rep, "quantale", name, cl.as_dict())
            gname = Q.notes.get("groupoid")
            G = _groupoid_named(ws, gname) if gname and e.mutation is None else None
            if G is not None:
                gr = validate_groupoid(G)
                out.append(passed("theorem.groupoid-quantale") if cl.groupoid_quantale else
                           incident("theorem.groupoid-quantale", (cl.failing,), "O(G) of an open groupoid"))
                same = cl.inverse_quantal_frame == gr.etale
                out.append(passed("theorem.iqf-iff-etale") if same else
                           incident("theorem.iqf-iff-etale", (cl.inverse_quantal_frame, gr.etale)))
            return out
        _guarded(rep, "quantale", e.name, f)


def _groupoid_named(ws: Workspace, gname: str):
    for e in ws.of_kind("groupoid"):
        if e.obj.name == gname:
            return e.obj
    return None


def _groupoid(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "groupoid", opts):
        def f(G=e.obj, name=e.name):
            gr = validate_groupoid(G)
            out = list(gr.outcome.checks)
            info = dict(gr.flags())
            if gr.open:
                Q = oquantale(G, opts.convention)
                if Q.n <= opts.max_size:
                    cl = classify(Q)
                    info.update(cl.as_dict())
                cv = coverability(G)
                info["coverable"] = cv.passed
                if not cv.passed:
                    info["uncovered-arrow"] = cv.witness
            _data(rep, "groupoid", name, info)
            return out
        _guarded(rep, "groupoid", e.name, f)


def _cover(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "cover", opts):
        def f(cd=e.obj, name=e.name):
            o = check_cover(cd)
            if "bullet-differs" in o.data:
                _data(rep, "cover", name, {"bullet-differs": o.data["bullet-differs"]})
            return o.checks
        _guarded(rep, "cover", e.name, f)


def _covers_of(ws: Workspace, G, hat: bool):
    return [e.obj for e in ws.of_kind("cover") if e.mutation is None and (e.obj.Ghat if hat else e.obj.G) is G]


def _actions(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "action", opts):
        def f(a=e.obj, name=e.name):
            v = act_mod.validate_action(a)
            out = list(v.checks)
            if not v.passed:
                return out
            out += act_mod.check_act_inverse_image(a)
            orb = act_mod.invariants_and_orbit(a)
            out += orb.checks
            info = {"invariants": orb.data["invariant_labels"]}
            for cd in _covers_of(ws, a.G, hat=True):
                dr = act_mod.check_descent(a, cd)
                ol = act_mod.check_O_locale(a, ieqf_from_cover(cd))
                out += dr.checks
                tag = f"descent-iff-O-locale[{cd.name}]"
                out.append(passed(tag) if dr.ok == ol.passed else
                           incident(tag, (dr.witness, ol.first_failure() and ol.first_failure().witness)))
                info[f"descends[{cd.name}]"] = dr.ok
            for cd in _covers_of(ws, a.G, hat=False):
                back = act_mod.check_descent(act_mod.lift_action(a, cd), cd)
                ok = back.ok and back.action.act.fn == a.act.fn
                out.append(passed(f"lift-descend[{cd.name}]") if ok else
                           incident(f"lift-descend[{cd.name}]", back.witness))
            _data(rep, "actions", name, info)
            return out
        _guarded(rep, "actions", e.name, f)


def _hilbert(ws: Workspace, rep: Report, opts: Options) -> None:
    for e in _entries(ws, "module", opts):
        def f(h=e.obj, name=e.name):
            if h.ip is None:
                return [skipped("hilbert", "no inner product")]
            pk = ["pre-hilbert", "hilbert", "complete"]
            if h.spp is not None:
                pk.append("supported")
                if h.Q.spp is not None:
                    pk.append("stable")
            o = hil_mod.validate_hilbert(h, pk)
            out = list(o.checks)
            if o.passed and h.spp is not None and h.Q.unit is not None:
                out += hil_mod.check_sheaf(h).checks
            if o.passed and h.action is not None:
                for cd in _covers_of(ws, h.action.G, hat=True):
                    t = hil_mod.thm_descent_iff_inner(h.action, ieqf_from_cover(cd), cd)
                    out += [Check(f"{c.name}[{cd.name}]", c.status, c.witness, c.detail) for c in t.checks
                            if c.name == "descent-iff-inner"]
                    _data(rep, "hilbert", f"{name}[{cd.name}]", {"descent": t.data["descent"],
                                                                  "O-sheaf": t.data["O-sheaf"]})
            return out
        _guarded(rep, "hilbert", e.name, f)
    for e in _entries(ws, "cover", opts):
        cd = e.obj
        if e.mutation is not None or cd.Ghat.G0.n != 1 or not cd.Ghat.G1.is_discrete():
            continue

        def f(cd=cd, name=e.name):
            o = hil_mod.check_sheaf_correspondence(cd, ieqf_from_cover(cd))
            _data(rep, "hilbert", f"{name} sheaves", dict(o.data))
            return o.checks
        _guarded(rep, "hilbert", e.name, f)


def _bilocale(ws: Workspace, rep: Report, opts: Options) -> None:
    ents = _entries(ws, "bilocale", opts)
    valid = []
    for e in ents:
        def f(b=e.obj, e=e):
            v = bl_mod.validate_bilocale(b)
            out = list(v.checks)
            if v.passed:
                valid.append(e)
            out += bl_mod.check_correspondence(b).checks
            if v.passed:
                out += _adjointness(b)
            return out
        _guarded(rep, "bilocale", e.name, f)
    valid.sort(key=lambda e: e.name)
    for x in valid:
        for y in valid:
            if x.obj.H is not y.obj.G:
                continue
            key = f"{x.name}*{y.name}"

            def f(x=x.obj, y=y.obj):
                comp = bl_mod.tensor_compose(x, y)
                out = list(comp.agreement.checks)
                out += [Check("composite." + c.name, c.status, c.witness, c.detail)
                        for c in bl_mod.validate_bilocale(comp.bilocale).checks]
                out += bl_mod.composite_O_locales(comp.bilocale).checks
                cd = act_mod._default_cover(x.H)
                if cd is not None:
                    out += bl_mod.check_tensor_agreement(x, y, cd).checks
                return out
            _guarded(rep, "bilocale", key, f)
    for x in valid:
        for y in valid:
            if x.obj.H is not y.obj.G:
                continue
            for z in valid:
                if y.obj.H is not z.obj.G:
                    continue
                key = f"{x.name}*{y.name}*{z.name}"
                _guarded(rep, "bilocale", key, lambda x=x.obj, y=y.obj, z=z.obj:
                         bl_mod.associativity_smoke(x, y, z).checks)


def _adjointness(b) -> list[Check]:
    """Bilocales whose right side is a sheaf over an étale groupoid."""
    from .locale import local_homeo_witness
    H = b.H
    if not validate_groupoid(H).etale or local_homeo_witness(b.q) is not None:
        return []
    cdG = act_mod._default_cover(b.G)
    if cdG is None:
        return []
    h = hil_mod.sheaf_of(b.right_as_left())
    lact = act_mod.module_of(act_mod.lift_action(b.left, cdG)).table
    return hil_mod.check_adjointness(lact, h, ieqf_from_cover(cdG)).checks


_SUITE_FN = {"suplat": _suplat, "tensor": _tensor, "locale": _locale, "quantale": _quantale,
             "groupoid": _groupoid, "cover": _cover, "actions": _actions, "hilbert": _hilbert,
             "bilocale": _bilocale}
