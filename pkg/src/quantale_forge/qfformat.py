"""The ``qf-format 1`` structure-description files.

A file is a header line followed by sections.  Each section is either a
one-line recipe::

    groupoid pair2 = pair 2

or a block ending in ``end``::

    action swap
      groupoid z2
      space AB
      anchor a *
      act g a b
    end

A block may start from a recipe (``from oquantale z2``) and then override
single table entries; this is how mutation fixtures are written.  ``mutation``
and ``note`` lines carry provenance.  Tokens are separated by whitespace and a
token starting with ``#`` begins a comment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .actions import (GAction, anchor_action, check_descent, invariants_and_orbit, lift_action, make_action,
                      regular_action)
from .bilocale import Bilocale, make_bilocale, point_bilocale, self_bilocale, tensor_compose
from .cover import CoverData, germ_cover, ieqf_from_cover, make_cover, trivial_cover
from .errors import ParseError, QFError
from .groupoid import (FinGroupoid, cyclic_group, groupoid_from_tables, mult_table, opposite, oquantale,
                       pair_groupoid, pair_sierpinski, pair_space_groupoid, unit_groupoid, z2_on_sierpinski)
from .hilbert import HilbertModule, self_module, sheaf_of, zero_module
from .locale import FinSpace, point, sierpinski
from .quantale import BasedStructure, Quantale, one_element
from .suplat import SupLattice

HEADER = "qf-format 1"
KINDS = ("space", "groupoid", "quantale", "action", "cover", "module", "bilocale")
TYPES = {"space": FinSpace, "groupoid": FinGroupoid, "quantale": Quantale, "action": GAction,
         "cover": CoverData, "module": HilbertModule, "bilocale": Bilocale}


@dataclass
class Tok:
    text: str
    line: int
    col: int


@dataclass
class Entry:
    kind: str
    name: str
    obj: Any
    line: int = 0
    recipe: list[str] | None = None
    body: list[list[str]] = field(default_factory=list)  # explicit or override lines, as token texts
    mutation: str | None = None
    notes: list[str] = field(default_factory=list)
    source: str = ""


class Workspace:
    """Named objects in declaration order."""

    def __init__(self):
        self.entries: dict[str, Entry] = {}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name) -> Any:
        return self.entries[name].obj

    def add(self, entry: Entry) -> Entry:
        if entry.name in self.entries:
            raise ParseError(f"duplicate name {entry.name!r}", entry.line, 1, entry.name)
        self.entries[entry.name] = entry
        return entry

    def of_kind(self, kind: str) -> list[Entry]:
        return [e for e in self.entries.values() if e.kind == kind]

    def names(self) -> list[str]:
        return list(self.entries)

    def merge(self, other: "Workspace") -> "Workspace":
        for e in other.entries.values():
            self.add(e)
        return self

    def fresh_name(self, base: str) -> str:
        if base not in self.entries:
            return base
        k = 2
        while f"{base}_{k}" in self.entries:
            k += 1
        return f"{base}_{k}"


# -- lexing -----------------------------------------------------------------------------

def _tokens(line: str, lineno: int) -> list[Tok]:
    out = []
    col = 0
    n = len(line)
    while col < n:
        while col < n and line[col].isspace():
            col += 1
        if col >= n:
            break
        start = col
        while col < n and not line[col].isspace():
            col += 1
        text = line[start:col]
        if text.startswith("#"):
            break
        out.append(Tok(text, lineno, start + 1))
    return out


# -- parsing ----------------------------------------------------------------------------

def parse(path) -> Workspace:
    p = Path(path)
    return parse_text(p.read_text(), source=str(p))


def parse_text(text: str, source: str = "<text>", ws: Workspace | None = None) -> Workspace:
    ws = ws if ws is not None else Workspace()
    lines = [(i + 1, _tokens(raw, i + 1)) for i, raw in enumerate(text.splitlines())]
    lines = [(i, t) for i, t in lines if t]
    if not lines:
        return ws
    first_no, first = lines[0]
    if " ".join(t.text for t in first) != HEADER:
        raise ParseError(f"expected header {HEADER!r}", first_no, 1)
    k = 1
    while k < len(lines):
        no, toks = lines[k]
        head = toks[0]
        if head.text not in KINDS:
            raise ParseError(f"unknown section {head.text!r}", no, head.col)
        if len(toks) < 2:
            raise ParseError(f"{head.text} needs a name", no, head.col + len(head.text))
        name = toks[1].text
        if len(toks) >= 3:
            if toks[2].text != "=" or len(toks) < 4:
                raise ParseError("expected '= recipe' or a block", no, toks[2].col, name)
            entry = Entry(head.text, name, None, no, recipe=[t.text for t in toks[3:]], source=source)
            entry.obj = _build(ws, entry, toks[3:], [])
            ws.add(entry)
            k += 1
            continue
        body = []
        k += 1
        while True:
            if k >= len(lines):
                raise ParseError(f"section {name!r} is missing 'end'", no, 1, name)
            bno, btoks = lines[k]
            k += 1
            if btoks[0].text == "end" and len(btoks) == 1:
                break
            body.append(btoks)
        entry = Entry(head.text, name, None, no, source=source)
        rest = []
        recipe_toks = None
        for b in body:
            word = b[0].text
            if word == "mutation":
                entry.mutation = " ".join(t.text for t in b[1:]) or "mutation"
            elif word == "note":
                entry.notes.append(" ".join(t.text for t in b[1:]))
            elif word == "from":
                if recipe_toks is not None or rest:
                    raise ParseError("'from' must be the first table line", b[0].line, b[0].col, name)
                if len(b) < 2:
                    raise ParseError("'from' needs a recipe", b[0].line, b[0].col, name)
                recipe_toks = b[1:]
            else:
                rest.append(b)
        entry.body = [[t.text for t in b] for b in rest]
        if recipe_toks is not None:
            entry.recipe = [t.text for t in recipe_toks]
        entry.obj = _build(ws, entry, recipe_toks, rest)
        ws.add(entry)
    return ws


def _build(ws: Workspace, entry: Entry, recipe: list[Tok] | None, body: list[list[Tok]]):
    anchor = recipe[0] if recipe else Tok("", entry.line, 1)
    try:
        if recipe:
            obj = _recipe(ws, entry, recipe)
            return _override(ws, entry, obj, body) if body else obj
        return _explicit(ws, entry, body)
    except ParseError:
        raise
    except QFError as exc:
        raise ParseError(str(exc), anchor.line, anchor.col, entry.name) from exc
    except (KeyError, ValueError, IndexError) as exc:
        raise ParseError(f"bad {entry.kind} definition: {exc}", anchor.line, anchor.col, entry.name) from exc


class _Ctx:
    def __init__(self, ws: Workspace, entry: Entry):
        self.ws, self.entry = ws, entry

    def err(self, msg: str, tok: Tok):
        return ParseError(msg, tok.line, tok.col, self.entry.name)

    def ref(self, tok: Tok, kind: str):
        e = self.ws.entries.get(tok.text)
        if e is None:
            raise self.err(f"unknown {kind} {tok.text!r}", tok)
        if e.kind != kind:
            raise self.err(f"{tok.text!r} is a {e.kind}, not a {kind}", tok)
        return e.obj

    def point(self, S: FinSpace, tok: Tok, what: str = "point") -> int:
        if tok.text not in S.points:
            raise self.err(f"unknown {what} {tok.text!r} in {S.name}", tok)
        return S.points.index(tok.text)

    def elem(self, L: SupLattice, tok: Tok, what: str = "element") -> int:
        if tok.text not in L.labels:
            raise self.err(f"unknown {what} {tok.text!r}", tok)
        return L.labels.index(tok.text)

    def int(self, tok: Tok) -> int:
        try:
            return int(tok.text)
        except ValueError:
            raise self.err(f"expected an integer, got {tok.text!r}", tok) from None

    def arity(self, line: list[Tok], n: int):
        if len(line) != n + 1:
            raise self.err(f"{line[0].text} takes {n} arguments", line[0])


def _recipe(ws: Workspace, entry: Entry, r: list[Tok]):
    c = _Ctx(ws, entry)
    kind, word, args = entry.kind, r[0].text, r[1:]
    name = entry.name

    def need(n):
        if len(args) < n:
            raise c.err(f"recipe {word!r} needs {n} argument(s)", r[0])

    if word == "copy":
        need(1)
        return c.ref(args[0], kind)
    if kind == "space":
        if word == "point":
            return _renamed(point(), name)
        if word == "sierpinski":
            return _renamed(sierpinski(), name)
        if word in ("discrete", "indiscrete"):
            need(1)
            return getattr(FinSpace, word)([t.text for t in args], name=name)
        if word == "orbit":
            need(1)
            return _renamed(invariants_and_orbit(c.ref(args[0], "action")).data["orbit_space"], name)
    elif kind == "groupoid":
        if word == "pair":
            need(1)
            return pair_groupoid(c.int(args[0]), name=name)
        if word == "cyclic":
            need(1)
            ind = len(args) > 1 and args[1].text == "indiscrete"
            return cyclic_group(c.int(args[0]), indiscrete=ind, name=name)
        if word == "unit":
            need(1)
            return unit_groupoid(c.ref(args[0], "space"), name=name)
        if word == "pair-space":
            need(1)
            return pair_space_groupoid(c.ref(args[0], "space"), name=name)
        if word == "pair-sierpinski":
            return pair_sierpinski(name=name)
        if word == "z2-sierpinski":
            return z2_on_sierpinski(name=name)
        if word == "opposite":
            need(1)
            G = opposite(c.ref(args[0], "groupoid"))
            G.name = name
            return G
        if word == "covering":
            need(1)
            return c.ref(args[0], "cover").Ghat
    elif kind == "quantale":
        if word == "oquantale":
            need(1)
            conv = args[1].text if len(args) > 1 else "r"
            return oquantale(c.ref(args[0], "groupoid"), conv)
        if word == "one":
            return one_element()
        if word in ("derived", "qhat"):
            need(1)
            d = ieqf_from_cover(c.ref(args[0], "cover"))
            return d.derived() if word == "derived" else d.Qhat
    elif kind == "action":
        if word == "anchor":
            need(1)
            return anchor_action(c.ref(args[0], "groupoid"), name=name)
        if word == "regular":
            need(1)
            X = c.ref(args[1], "space") if len(args) > 1 else None
            return regular_action(c.ref(args[0], "groupoid"), X, name=name)
        if word == "lift":
            need(2)
            a = lift_action(c.ref(args[0], "action"), c.ref(args[1], "cover"))
            a.name = name
            return a
        if word == "descend":
            need(2)
            dr = check_descent(c.ref(args[0], "action"), c.ref(args[1], "cover"))
            if not dr.ok:
                raise c.err(f"action does not descend: {dr.witness}", args[0])
            dr.action.name = name
            return dr.action
    elif kind == "cover":
        if word in ("germ", "trivial"):
            need(1)
            G = c.ref(args[0], "groupoid")
            return germ_cover(G) if word == "germ" else trivial_cover(G)
    elif kind == "module":
        if word in ("self", "zero"):
            need(1)
            Q = c.ref(args[0], "quantale")
            h = self_module(Q) if word == "self" else zero_module(Q)
            h.name = name
            return h
        if word == "sheaf":
            need(1)
            h = sheaf_of(c.ref(args[0], "action"))
            h.name = name
            return h
    elif kind == "bilocale":
        if word == "self":
            need(1)
            return self_bilocale(c.ref(args[0], "groupoid"), name=name)
        if word == "compose":
            need(2)
            comp = tensor_compose(c.ref(args[0], "bilocale"), c.ref(args[1], "bilocale"), name=name)
            return comp.bilocale
        if word == "point":
            need(2)
            G, H = c.ref(args[0], "groupoid"), c.ref(args[1], "groupoid")
            x0 = c.point(G.G0, args[2], "object") if len(args) > 2 else 0
            y0 = c.point(H.G0, args[3], "object") if len(args) > 3 else 0
            return point_bilocale(G, H, x0, y0, name=name)
    raise c.err(f"unknown {kind} recipe {word!r}", r[0])


def _renamed(S: FinSpace, name: str) -> FinSpace:
    T = FinSpace(S.points, S.leq, name=name)
    return T


# -- explicit blocks -------------------------------------------------------------------

def _lines(body, allowed, c: _Ctx):
    out = {k: [] for k in allowed}
    for b in body:
        if b[0].text not in allowed:
            raise c.err(f"unexpected line {b[0].text!r}", b[0])
        out[b[0].text].append(b)
    return out


def _single(lines, key, c: _Ctx, required=True):
    got = lines[key]
    if not got:
        if required:
            raise c.err(f"missing {key!r} line", Tok(key, c.entry.line, 1))
        return None
    if len(got) > 1:
        raise c.err(f"repeated {key!r} line", got[1][0])
    return got[0]


def _explicit(ws: Workspace, entry: Entry, body: list[list[Tok]]):
    c = _Ctx(ws, entry)
    kind, name = entry.kind, entry.name
    if kind == "space":
        L = _lines(body, ("points", "le"), c)
        pts = _single(L, "points", c)
        labels = [t.text for t in pts[1:]]
        S0 = FinSpace.discrete(labels)
        pairs = []
        for b in L["le"]:
            c.arity(b, 2)
            pairs.append((labels[c.point(S0, b[1])], labels[c.point(S0, b[2])]))
        return FinSpace.from_order(labels, pairs, name=name)
    if kind == "groupoid":
        L = _lines(body, ("objects", "arrows", "arrow", "unit", "mul"), c)
        ob, ar = _single(L, "objects", c), _single(L, "arrows", c)
        G0, G1 = c.ref(ob[1], "space"), c.ref(ar[1], "space")
        d, r, inv, unit, mult = {}, {}, {}, {}, {}
        for b in L["arrow"]:
            c.arity(b, 4)
            g = G1.points[c.point(G1, b[1], "arrow")]
            d[g] = G0.points[c.point(G0, b[2], "object")]
            r[g] = G0.points[c.point(G0, b[3], "object")]
            inv[g] = G1.points[c.point(G1, b[4], "arrow")]
        missing = [g for g in G1.points if g not in d]
        if missing:
            raise c.err(f"arrow {missing[0]!r} has no 'arrow' line", ar[1])
        for b in L["unit"]:
            c.arity(b, 2)
            unit[G0.points[c.point(G0, b[1], "object")]] = G1.points[c.point(G1, b[2], "arrow")]
        for b in L["mul"]:
            c.arity(b, 3)
            g, h, k = (G1.points[c.point(G1, t, "arrow")] for t in b[1:4])
            mult[(g, h)] = k
        return groupoid_from_tables(G0, G1, d, r, mult, inv, unit, name=name)
    if kind == "quantale":
        keys = ("elements", "le", "mul", "inv", "unit", "base-elements", "base-le", "lres", "rres", "spp", "upsilon")
        L = _lines(body, keys, c)
        carrier = _lattice(c, _single(L, "elements", c), L["le"], name)
        n = carrier.n
        mult = np.full((n, n), carrier.bottom, dtype=np.int64)
        for b in L["mul"]:
            c.arity(b, 3)
            mult[c.elem(carrier, b[1]), c.elem(carrier, b[2])] = c.elem(carrier, b[3])
        inv = None
        if L["inv"]:
            inv = np.arange(n)
            for b in L["inv"]:
                c.arity(b, 2)
                inv[c.elem(carrier, b[1])] = c.elem(carrier, b[2])
        unit = None
        u = _single(L, "unit", c, required=False)
        if u is not None:
            c.arity(u, 1)
            unit = None if u[1].text == "none" else c.elem(carrier, u[1])
        based = spp = ups = None
        be = _single(L, "base-elements", c, required=False)
        if be is not None:
            B = _lattice(c, be, L["base-le"], f"B({name})")
            lres = np.full((B.n, n), carrier.bottom, dtype=np.int64)
            rres = np.full((n, B.n), carrier.bottom, dtype=np.int64)
            for b in L["lres"]:
                c.arity(b, 3)
                lres[c.elem(B, b[1]), c.elem(carrier, b[2])] = c.elem(carrier, b[3])
            for b in L["rres"]:
                c.arity(b, 3)
                rres[c.elem(carrier, b[1]), c.elem(B, b[2])] = c.elem(carrier, b[3])
            based = BasedStructure(B, lres, rres)
            if L["spp"]:
                spp = np.full(n, B.bottom, dtype=np.int64)
                for b in L["spp"]:
                    c.arity(b, 2)
                    spp[c.elem(carrier, b[1])] = c.elem(B, b[2])
            if L["upsilon"]:
                ups = np.full(n, B.bottom, dtype=np.int64)
                for b in L["upsilon"]:
                    c.arity(b, 2)
                    ups[c.elem(carrier, b[1])] = c.elem(B, b[2])
        return Quantale(carrier, mult, inv, unit, based, spp, ups, name=name)
    if kind == "action":
        L = _lines(body, ("groupoid", "space", "anchor", "act"), c)
        G = c.ref(_single(L, "groupoid", c)[1], "groupoid")
        X = c.ref(_single(L, "space", c)[1], "space")
        p, table = _anchor_lines(c, X, G.G0, L["anchor"]), {}
        for b in L["act"]:
            c.arity(b, 3)
            table[(G.G1.points[c.point(G.G1, b[1], "arrow")], X.points[c.point(X, b[2])])] = \
                X.points[c.point(X, b[3])]
        return make_action(G, X, p, table, name=name)
    if kind == "cover":
        L = _lines(body, ("groupoid", "covering", "J0", "J1"), c)
        G = c.ref(_single(L, "groupoid", c)[1], "groupoid")
        Gh = c.ref(_single(L, "covering", c)[1], "groupoid")
        J0 = {}
        for b in L["J0"]:
            c.arity(b, 2)
            J0[Gh.G0.points[c.point(Gh.G0, b[1], "object")]] = G.G0.points[c.point(G.G0, b[2], "object")]
        J1 = {}
        for b in L["J1"]:
            c.arity(b, 2)
            J1[Gh.G1.points[c.point(Gh.G1, b[1], "arrow")]] = G.G1.points[c.point(G.G1, b[2], "arrow")]
        return make_cover(G, Gh, J0, J1, name=name)
    if kind == "module":
        L = _lines(body, ("quantale", "elements", "le", "act", "ip", "spp"), c)
        Q = c.ref(_single(L, "quantale", c)[1], "quantale")
        X = _lattice(c, _single(L, "elements", c), L["le"], name)
        act = np.full((Q.n, X.n), X.bottom, dtype=np.int64)
        for b in L["act"]:
            c.arity(b, 3)
            act[c.elem(Q.L, b[1]), c.elem(X, b[2])] = c.elem(X, b[3])
        ip = None
        if L["ip"]:
            ip = np.full((X.n, X.n), Q.L.bottom, dtype=np.int64)
            for b in L["ip"]:
                c.arity(b, 3)
                ip[c.elem(X, b[1]), c.elem(X, b[2])] = c.elem(Q.L, b[3])
        spp = None
        if L["spp"]:
            spp = np.full(X.n, Q.L.bottom, dtype=np.int64)
            for b in L["spp"]:
                c.arity(b, 2)
                spp[c.elem(X, b[1])] = c.elem(Q.L, b[2])
        return HilbertModule(Q, X, act, ip, None, spp, name=name)
    if kind == "bilocale":
        L = _lines(body, ("left", "right", "space", "p", "q", "act", "ract"), c)
        G = c.ref(_single(L, "left", c)[1], "groupoid")
        H = c.ref(_single(L, "right", c)[1], "groupoid")
        X = c.ref(_single(L, "space", c)[1], "space")
        p = _anchor_lines(c, X, G.G0, L["p"])
        q = _anchor_lines(c, X, H.G0, L["q"])
        act, ract = {}, {}
        for b in L["act"]:
            c.arity(b, 3)
            act[(G.G1.points[c.point(G.G1, b[1], "arrow")], X.points[c.point(X, b[2])])] = X.points[c.point(X, b[3])]
        for b in L["ract"]:
            c.arity(b, 3)
            ract[(X.points[c.point(X, b[1])], H.G1.points[c.point(H.G1, b[2], "arrow")])] = \
                X.points[c.point(X, b[3])]
        return make_bilocale(G, H, X, p, act, q, ract, name=name)
    raise c.err(f"unknown kind {kind!r}", Tok(kind, entry.line, 1))


def _lattice(c: _Ctx, elems: list[Tok], le_lines, name: str) -> SupLattice:
    labels = [t.text for t in elems[1:]]
    if len(set(labels)) != len(labels):
        raise c.err("repeated element label", elems[0])
    pairs = []
    for b in le_lines:
        c.arity(b, 2)
        for t in b[1:]:
            if t.text not in labels:
                raise c.err(f"unknown element {t.text!r}", t)
        pairs.append((b[1].text, b[2].text))
    return SupLattice.from_order(labels, pairs, name=name)


def _anchor_lines(c: _Ctx, X: FinSpace, B: FinSpace, lines) -> dict:
    p = {}
    for b in lines:
        c.arity(b, 2)
        p[X.points[c.point(X, b[1])]] = B.points[c.point(B, b[2], "object")]
    missing = [x for x in X.points if x not in p]
    if missing:
        raise c.err(f"point {missing[0]!r} has no anchor", Tok(missing[0], c.entry.line, 1))
    return p


# -- overrides on a recipe -----------------------------------------------------------------

def _override(ws: Workspace, entry: Entry, obj, body: list[list[Tok]]):
    c = _Ctx(ws, entry)
    kind, name = entry.kind, entry.name
    if kind == "quantale":
        Q = obj
        mult, inv, spp, ups, unit = Q.mult.copy(), None if Q.inv is None else Q.inv.copy(), \
            None if Q.spp is None else Q.spp.copy(), None if Q.upsilon is None else Q.upsilon.copy(), Q.unit
        L = Q.L
        for b in body:
            w = b[0].text
            if w == "mul":
                c.arity(b, 3)
                mult[c.elem(L, b[1]), c.elem(L, b[2])] = c.elem(L, b[3])
            elif w == "inv":
                c.arity(b, 2)
                inv[c.elem(L, b[1])] = c.elem(L, b[2])
            elif w == "unit":
                c.arity(b, 1)
                unit = None if b[1].text == "none" else c.elem(L, b[1])
            elif w in ("spp", "upsilon"):
                c.arity(b, 2)
                (spp if w == "spp" else ups)[c.elem(L, b[1])] = c.elem(Q.B, b[2])
            else:
                raise c.err(f"cannot override {w!r} on a quantale", b[0])
        return Quantale(Q.carrier, mult, inv, unit, Q.based, spp, ups, name=name, notes=dict(Q.notes))
    if kind == "groupoid":
        G = obj
        mt = mult_table(G)
        inv = {G.G1.points[g]: G.G1.points[G.i.fn[g]] for g in range(G.G1.n)}
        for b in body:
            w = b[0].text
            if w == "mul":
                c.arity(b, 3)
                g, h, k = (G.G1.points[c.point(G.G1, t, "arrow")] for t in b[1:4])
                mt[(g, h)] = k
            elif w == "inv":
                c.arity(b, 2)
                inv[G.G1.points[c.point(G.G1, b[1], "arrow")]] = G.G1.points[c.point(G.G1, b[2], "arrow")]
            else:
                raise c.err(f"cannot override {w!r} on a groupoid", b[0])
        P1, P0 = G.G1.points, G.G0.points
        return groupoid_from_tables(G.G0, G.G1, {g: P0[G.d.fn[i]] for i, g in enumerate(P1)},
                                    {g: P0[G.r.fn[i]] for i, g in enumerate(P1)}, mt, inv,
                                    {x: P1[G.u.fn[i]] for i, x in enumerate(P0)}, name=name)
    if kind == "action":
        a = obj
        G, X = a.G, a.X
        p = a.p.as_dict()
        table = {(G.G1.points[g], X.points[x]): X.points[a.act.fn[k]] for k, (g, x) in enumerate(a.GX.coords)}
        for b in body:
            w = b[0].text
            if w == "act":
                c.arity(b, 3)
                table[(G.G1.points[c.point(G.G1, b[1], "arrow")], X.points[c.point(X, b[2])])] = \
                    X.points[c.point(X, b[3])]
            elif w == "anchor":
                c.arity(b, 2)
                p[X.points[c.point(X, b[1])]] = G.G0.points[c.point(G.G0, b[2], "object")]
            else:
                raise c.err(f"cannot override {w!r} on an action", b[0])
        return make_action(G, X, p, table, name=name)
    if kind == "cover":
        cd = obj
        J0, J1 = cd.J0.as_dict(), cd.J1.as_dict()
        for b in body:
            w = b[0].text
            if w == "J1":
                c.arity(b, 2)
                J1[cd.Ghat.G1.points[c.point(cd.Ghat.G1, b[1], "arrow")]] = cd.G.G1.points[c.point(cd.G.G1, b[2], "arrow")]
            elif w == "J0":
                c.arity(b, 2)
                J0[cd.Ghat.G0.points[c.point(cd.Ghat.G0, b[1], "object")]] = \
                    cd.G.G0.points[c.point(cd.G.G0, b[2], "object")]
            else:
                raise c.err(f"cannot override {w!r} on a cover", b[0])
        return make_cover(cd.G, cd.Ghat, J0, J1, name=name)
    if kind == "module":
        h = obj
        act, ip = h.act.copy(), None if h.ip is None else h.ip.copy()
        spp = None if h.spp is None else h.spp.copy()
        Q, X = h.Q, h.X
        for b in body:
            w = b[0].text
            if w == "act":
                c.arity(b, 3)
                act[c.elem(Q.L, b[1]), c.elem(X, b[2])] = c.elem(X, b[3])
            elif w == "ip":
                c.arity(b, 3)
                ip[c.elem(X, b[1]), c.elem(X, b[2])] = c.elem(Q.L, b[3])
            elif w == "spp":
                c.arity(b, 2)
                spp[c.elem(X, b[1])] = c.elem(Q.L, b[2])
            else:
                raise c.err(f"cannot override {w!r} on a module", b[0])
        return h.replace(act=act, ip=ip, spp=spp, name=name, action=None)
    if kind == "bilocale":
        bl = obj
        G, H, X = bl.G, bl.H, bl.X
        p, q = bl.p.as_dict(), bl.q.as_dict()
        act = {(G.G1.points[g], X.points[x]): X.points[bl.left.act.fn[k]] for k, (g, x) in enumerate(bl.left.GX.coords)}
        ract = {(X.points[x], H.G1.points[h]): X.points[bl.bct.fn[k]] for k, (x, h) in enumerate(bl.XH.coords)}
        for b in body:
            w = b[0].text
            if w in ("p", "q"):
                c.arity(b, 2)
                B = G.G0 if w == "p" else H.G0
                (p if w == "p" else q)[X.points[c.point(X, b[1])]] = B.points[c.point(B, b[2], "object")]
            elif w == "act":
                c.arity(b, 3)
                act[(G.G1.points[c.point(G.G1, b[1], "arrow")], X.points[c.point(X, b[2])])] = X.points[c.point(X, b[3])]
            elif w == "ract":
                c.arity(b, 3)
                ract[(X.points[c.point(X, b[1])], H.G1.points[c.point(H.G1, b[2], "arrow")])] = \
                    X.points[c.point(X, b[3])]
            else:
                raise c.err(f"cannot override {w!r} on a bilocale", b[0])
        return make_bilocale(G, H, X, p, act, q, ract, name=name)
    raise c.err(f"{kind} blocks do not take overrides", body[0][0])


# -- emission --------------------------------------------------------------------------------

def emit(ws: Workspace, names=None) -> str:
    """Text that re-parses to structurally equal objects; references are emitted first."""
    names = list(ws.entries) if names is None else _closure(ws, names)
    out = [HEADER, ""]
    for n in names:
        out += emit_entry(ws, ws.entries[n])
        out.append("")
    return "\n".join(out).rstrip() + "\n"


def _closure(ws: Workspace, names) -> list[str]:
    """Requested entries plus everything declared before them (declaration order is a valid dependency order)."""
    last = max(list(ws.entries).index(n) for n in names)
    return list(ws.entries)[: last + 1]


def emit_entry(ws: Workspace, e: Entry) -> list[str]:
    meta = ([f"  mutation {e.mutation}"] if e.mutation else []) + [f"  note {n}" for n in e.notes]
    if e.recipe is not None and not e.body and not meta:
        return [f"{e.kind} {e.name} = {' '.join(e.recipe)}"]
    lines = [f"{e.kind} {e.name}"] + meta
    if e.recipe is not None:
        lines.append(f"  from {' '.join(e.recipe)}")
        lines += ["  " + " ".join(b) for b in e.body]
    else:
        lines += ["  " + l for l in explicit_lines(ws, e)]
    lines.append("end")
    return lines


def _ref(ws: Workspace, obj, kind: str) -> str:
    for e in ws.entries.values():
        if e.kind == kind and e.obj is obj:
            return e.name
    raise ParseError(f"{kind} {getattr(obj, 'name', '?')!r} is not named in the workspace")


def _le_lines(labels, leq) -> list[str]:
    """Covering pairs plus equivalences; parsing takes the transitive closure."""
    n = len(labels)
    strict = leq & ~leq.T
    cover = strict & ~((strict.astype(np.int64) @ strict.astype(np.int64)) > 0)
    equiv = leq & leq.T & ~np.eye(n, dtype=bool)
    return [f"le {labels[a]} {labels[b]}" for a, b in np.argwhere(cover | equiv)]


def explicit_lines(ws: Workspace, e: Entry) -> list[str]:
    o = e.obj
    if e.kind == "space":
        return [f"points {' '.join(o.points)}"] + _le_lines(o.points, o.leq)
    if e.kind == "groupoid":
        out = [f"objects {_ref(ws, o.G0, 'space')}", f"arrows {_ref(ws, o.G1, 'space')}"]
        P1, P0 = o.G1.points, o.G0.points
        out += [f"arrow {g} {P0[o.d.fn[i]]} {P0[o.r.fn[i]]} {P1[o.i.fn[i]]}" for i, g in enumerate(P1)]
        out += [f"unit {x} {P1[o.u.fn[i]]}" for i, x in enumerate(P0)]
        out += [f"mul {g} {h} {k}" for (g, h), k in mult_table(o).items()]
        return out
    if e.kind == "quantale":
        L = o.L
        out = [f"elements {' '.join(L.labels)}"] + _le_lines(L.labels, L.leq)
        out += [f"mul {L.label(a)} {L.label(b)} {L.label(o.mult[a, b])}" for a in range(L.n) for b in range(L.n)
                if o.mult[a, b] != L.bottom]
        if o.inv is not None:
            out += [f"inv {L.label(a)} {L.label(o.inv[a])}" for a in range(L.n)]
        out.append(f"unit {'none' if o.unit is None else L.label(o.unit)}")
        if o.based is not None:
            B = o.B
            out.append(f"base-elements {' '.join(B.labels)}")
            out += ["base-" + s for s in _le_lines(B.labels, B.leq)]
            out += [f"lres {B.label(b)} {L.label(x)} {L.label(o.based.lres[b, x])}" for b in range(B.n)
                    for x in range(L.n) if o.based.lres[b, x] != L.bottom]
            out += [f"rres {L.label(x)} {B.label(b)} {L.label(o.based.rres[x, b])}" for x in range(L.n)
                    for b in range(B.n) if o.based.rres[x, b] != L.bottom]
            if o.spp is not None:
                out += [f"spp {L.label(x)} {B.label(o.spp[x])}" for x in range(L.n)]
            if o.upsilon is not None:
                out += [f"upsilon {L.label(x)} {B.label(o.upsilon[x])}" for x in range(L.n)]
        return out
    if e.kind == "action":
        out = [f"groupoid {_ref(ws, o.G, 'groupoid')}", f"space {_ref(ws, o.X, 'space')}"]
        out += [f"anchor {x} {y}" for x, y in o.p.as_dict().items()]
        out += [f"act {o.G.G1.points[g]} {o.X.points[x]} {o.X.points[o.act.fn[k]]}"
                for k, (g, x) in enumerate(o.GX.coords)]
        return out
    if e.kind == "cover":
        out = [f"groupoid {_ref(ws, o.G, 'groupoid')}", f"covering {_ref(ws, o.Ghat, 'groupoid')}"]
        out += [f"J0 {x} {y}" for x, y in o.J0.as_dict().items()]
        out += [f"J1 {x} {y}" for x, y in o.J1.as_dict().items()]
        return out
    if e.kind == "module":
        Q, X = o.Q, o.X
        out = [f"quantale {_ref(ws, Q, 'quantale')}", f"elements {' '.join(X.labels)}"] + _le_lines(X.labels, X.leq)
        out += [f"act {Q.label(a)} {X.label(x)} {X.label(o.act[a, x])}" for a in range(Q.n) for x in range(X.n)
                if o.act[a, x] != X.bottom]
        if o.ip is not None:
            out += [f"ip {X.label(x)} {X.label(y)} {Q.label(o.ip[x, y])}" for x in range(X.n) for y in range(X.n)
                    if o.ip[x, y] != Q.L.bottom]
        if o.spp is not None:
            out += [f"spp {X.label(x)} {Q.label(o.spp[x])}" for x in range(X.n)]
        return out
    if e.kind == "bilocale":
        G, H, X = o.G, o.H, o.X
        out = [f"left {_ref(ws, G, 'groupoid')}", f"right {_ref(ws, H, 'groupoid')}", f"space {_ref(ws, X, 'space')}"]
        out += [f"p {x} {y}" for x, y in o.p.as_dict().items()]
        out += [f"q {x} {y}" for x, y in o.q.as_dict().items()]
        out += [f"act {G.G1.points[g]} {X.points[x]} {X.points[o.left.act.fn[k]]}"
                for k, (g, x) in enumerate(o.left.GX.coords)]
        out += [f"ract {X.points[x]} {H.G1.points[h]} {X.points[o.bct.fn[k]]}" for k, (x, h) in enumerate(o.XH.coords)]
        return out
    raise ParseError(f"cannot emit {e.kind}")


# -- structural equality ---------------------------------------------------------------------

def same(a, b, kind: str) -> bool:
    """Structural equality on labels and tables."""
    eq = np.array_equal
    if kind == "space":
        return a.points == b.points and eq(a.leq, b.leq)
    if kind == "groupoid":
        return (same(a.G0, b.G0, "space") and same(a.G1, b.G1, "space") and a.d.fn == b.d.fn and a.r.fn == b.r.fn
                and a.i.fn == b.i.fn and a.u.fn == b.u.fn and mult_table(a) == mult_table(b))
    if kind == "lattice":
        return list(a.labels) == list(b.labels) and eq(a.leq, b.leq)
    if kind == "quantale":
        if not (same(a.L, b.L, "lattice") and eq(a.mult, b.mult) and a.unit == b.unit):
            return False
        for f in ("inv", "spp", "upsilon"):
            x, y = getattr(a, f), getattr(b, f)
            if (x is None) != (y is None) or (x is not None and not eq(x, y)):
                return False
        if (a.based is None) != (b.based is None):
            return False
        return a.based is None or (same(a.B, b.B, "lattice") and eq(a.based.lres, b.based.lres)
                                   and eq(a.based.rres, b.based.rres))
    if kind == "action":
        return (same(a.G, b.G, "groupoid") and same(a.X, b.X, "space") and a.p.fn == b.p.fn
                and a.GX.coords == b.GX.coords and a.act.fn == b.act.fn)
    if kind == "cover":
        return (same(a.G, b.G, "groupoid") and same(a.Ghat, b.Ghat, "groupoid") and a.J0.fn == b.J0.fn
                and a.J1.fn == b.J1.fn)
    if kind == "module":
        ok = same(a.Q, b.Q, "quantale") and same(a.X, b.X, "lattice") and eq(a.act, b.act)
        for f in ("ip", "spp"):
            x, y = getattr(a, f), getattr(b, f)
            ok = ok and ((x is None) == (y is None)) and (x is None or eq(x, y))
        return ok
    if kind == "bilocale":
        return (same(a.left, b.left, "action") and same(a.H, b.H, "groupoid") and a.q.fn == b.q.fn
                and a.XH.coords == b.XH.coords and a.bct.fn == b.bct.fn)
    raise ValueError(kind)
