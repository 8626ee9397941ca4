"""Bilocales: commuting left and right groupoid actions, and their composition.

A right action of H is stored natively as (q, bct) with bct defined on
{(x, h) : q(x) = r(h)}.  For reuse of the left-action machinery it is also
viewed as the left action h⋆x = x·h⁻¹ of H with anchor q.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .actions import (GAction, _default_cover, check_equivariant, check_module, check_O_locale, lift_action,
                      make_action, module_of, regular_action, validate_action)
from .checks import Outcome, failed, incident, passed, skipped, verdict
from .cover import CoverData, ieqf_from_cover
from .errors import StructuralError, UsageError
from .groupoid import FinGroupoid
from .locale import CMap, FinSpace, bits, continuity_witness, pullback, quotient_space
from .tensor import BaseAction, TensorLattice, canonical_pullback_map

MAX_ELEMENTS = 1 << 14


@dataclass(eq=False)
class Bilocale:
    G: FinGroupoid
    H: FinGroupoid
    X: FinSpace
    left: GAction
    q: CMap
    bct: CMap
    name: str = ""
    members: list | None = None  # for composites: tuples of underlying points per point
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.members is None:
            self.members = [[(x,)] for x in range(self.X.n)]

    @property
    def p(self) -> CMap:
        return self.left.p

    @property
    def XH(self) -> FinSpace:
        return self.bct.source

    def ract(self, x: int, h: int) -> int | None:
        k = self.XH.coord_index.get((x, h))
        return None if k is None else self.bct.fn[k]

    def right_as_left(self) -> GAction:
        H = self.H
        return make_action(H, self.X, list(self.q.fn), lambda h, x: self.ract(x, H.i.fn[h]),
                           name=f"{self.name} right")


def make_bilocale(G: FinGroupoid, H: FinGroupoid, X: FinSpace, p, act, q, bct, name: str = "") -> Bilocale:
    """``act(g, x)`` and ``bct(x, h)`` are callables on ids or label dicts."""
    left = make_action(G, X, p, act, name=f"{name} left")
    if isinstance(q, dict):
        q = CMap.from_labels(X, H.G0, q, name="q")
    elif not isinstance(q, CMap):
        q = CMap(X, H.G0, q, name="q")
    XH, _, _ = pullback(q, H.r, name=f"{X.name}×{H.G1.name}")
    table = []
    for x, h in XH.coords:
        if isinstance(bct, dict):
            key = (X.points[x], H.G1.points[h])
            if key not in bct:
                raise StructuralError(f"right action of {name!r} undefined at {key}")
            table.append(X[bct[key]])
        else:
            v = bct(x, h)
            if v is None:
                raise StructuralError(f"right action of {name!r} undefined at {(X.points[x], H.G1.points[h])}")
            table.append(int(v))
    return Bilocale(G, H, X, left, q, CMap(XH, X, table, name="bct"), name=name)


def self_bilocale(G: FinGroupoid, X: FinSpace | None = None, name: str = "") -> Bilocale:
    """G1 with left and right multiplication, anchors r and d."""
    X = X or G.G1
    return make_bilocale(G, G, X, list(G.r.fn), lambda g, x: G.mul(g, x), list(G.d.fn),
                         lambda x, h: G.mul(x, h), name=name or f"{G.name}-self")


def point_bilocale(G: FinGroupoid, H: FinGroupoid, x0: int = 0, y0: int = 0, name: str = "") -> Bilocale:
    """One point anchored at objects x0 and y0; only isotropy of those objects can act trivially."""
    X = FinSpace.discrete(["*"], name="pt")
    return make_bilocale(G, H, X, [x0], lambda g, x: 0, [y0], lambda x, h: 0, name=name or "point")


def validate_bilocale(b: Bilocale) -> Outcome:
    G, H, X = b.G, b.H, b.X
    out = Outcome(b.name)
    out.extend(validate_action(b.left).checks, prefix="left")
    out.extend(_validate_right(b).checks, prefix="right")
    w = None
    for k, (g, x) in enumerate(b.left.GX.coords):
        if b.q.fn[b.left.act.fn[k]] != b.q.fn[x]:
            w = (G.G1.points[g], X.points[x])
            break
    out.add(verdict("bilocale.q-invariant", w))
    w = None
    for k, (x, h) in enumerate(b.XH.coords):
        if b.p.fn[b.bct.fn[k]] != b.p.fn[x]:
            w = (X.points[x], H.G1.points[h])
            break
    out.add(verdict("bilocale.p-invariant", w))
    w = None
    if out["bilocale.q-invariant"].passed and out["bilocale.p-invariant"].passed:
        for k, (g, x) in enumerate(b.left.GX.coords):
            for h in range(H.G1.n):
                xh = b.ract(x, h)
                if xh is None:
                    continue
                lhs = b.left.apply(g, xh)
                rhs = b.ract(b.left.act.fn[k], h)
                if lhs != rhs:
                    w = (G.G1.points[g], X.points[x], H.G1.points[h])
                    break
            if w:
                break
        out.add(verdict("bilocale.associative", w))
    else:
        out.add(skipped("bilocale.associative", "an invariance square fails"))
    return out


def _validate_right(b: Bilocale) -> Outcome:
    H, X = b.H, b.X
    out = Outcome(f"{b.name} right")
    out.add(verdict("action.anchor-continuous", continuity_witness(b.q)))
    out.add(verdict("action.continuous", continuity_witness(b.bct)))
    w = None
    for k, (x, h) in enumerate(b.XH.coords):
        if b.q.fn[b.bct.fn[k]] != H.d.fn[h]:
            w = (X.points[x], H.G1.points[h])
            break
    out.add(verdict("action.pullback", w))
    w = None
    for x in range(X.n):
        if b.ract(x, H.u.fn[b.q.fn[x]]) != x:
            w = (X.points[x],)
            break
    out.add(verdict("action.unitarity", w))
    if out["action.pullback"].passed:
        w = None
        for k, (g, h) in enumerate(H.G2.coords):
            for x in range(X.n):
                if b.q.fn[x] != H.r.fn[g]:
                    continue
                if b.ract(x, H.m.fn[k]) != b.ract(b.ract(x, g), h):
                    w = (X.points[x], H.G1.points[g], H.G1.points[h])
                    break
            if w:
                break
        out.add(verdict("action.associativity", w))
    else:
        out.add(skipped("action.associativity", "anchor square fails"))
    return out


# -- composition -------------------------------------------------------------------------

@dataclass(eq=False)
class Composition:
    """Both descriptions of X⊗_H Y and the composite bilocale."""

    bilocale: Bilocale
    tensor: TensorLattice
    subframe: list
    pullback: FinSpace
    classes: list
    agreement: Outcome


def _triples(x: Bilocale, y: Bilocale, H: FinGroupoid, right, left):
    """(ξ, h, η) with q(ξ) = r(h) and d(h) = p'(η), plus the two ends of each triple."""
    out = []
    for xi in range(x.X.n):
        for h in range(H.G1.n):
            a = right(xi, h)
            if a is None:
                continue
            for eta in range(y.X.n):
                b = left(h, eta)
                if b is None:
                    continue
                out.append((xi, h, eta, a, b))
    return out


def _middle_tensor(x: Bilocale, y: Bilocale) -> TensorLattice:
    LX, LY, B = x.X.frame, y.X.frame, x.H.G0.frame
    right = np.array([[LX._mask_index[v & x.q.preimage(c)] for c in B.masks] for v in LX.masks], dtype=np.int64)
    left = np.array([[LY._mask_index[v & y.p.preimage(c)] for v in LY.masks] for c in B.masks], dtype=np.int64)
    return TensorLattice([LX, LY], [BaseAction(B, right, left)], name=f"{LX.name}⊗_{B.name}{LY.name}")


def pairing_subframe(T: TensorLattice, x: Bilocale, y: Bilocale, triples) -> list[int]:
    """Elements of X⊗_B Y on which [π12*∘β*, π3*] and [π1*, π23*∘α*] agree."""
    LX, LY = x.X.frame, y.X.frame

    def sets(pick):
        def f(mask_of):
            def g(v):
                m = 0
                for k, t in enumerate(triples):
                    if mask_of(v) >> pick(t) & 1:
                        m |= 1 << k
                return m
            return g
        return f

    lhs = canonical_pullback_map(T, [sets(lambda t: t[3])(lambda v: LX.masks[v]),
                                     sets(lambda t: t[2])(lambda v: LY.masks[v])])
    rhs = canonical_pullback_map(T, [sets(lambda t: t[0])(lambda v: LX.masks[v]),
                                     sets(lambda t: t[4])(lambda v: LY.masks[v])])
    return [e for e in T.elements(MAX_ELEMENTS) if lhs(e) == rhs(e)]


def tensor_compose(x: Bilocale, y: Bilocale, name: str = "") -> Composition:
    """X⊗_H Y as the equalizing subframe, checked against the spatial coequalizer."""
    H = x.H
    if y.G is not H:
        raise StructuralError(f"middle groupoids differ: {x.H.name} and {y.G.name}")
    name = name or f"{x.name}⊗{y.name}"
    P, _, _ = pullback(x.q, y.p, name=f"{x.X.name}×{y.X.name}")
    parent = list(range(P.n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    triples = _triples(x, y, H, x.ract, y.left.apply)
    for xi, h, eta, a, b in triples:
        u, v = find(P.coord_index[(a, eta)]), find(P.coord_index[(xi, b)])
        if u != v:
            parent[max(u, v)] = min(u, v)
    roots = sorted({find(i) for i in range(P.n)})
    cls = [roots.index(find(i)) for i in range(P.n)]
    Z, quo = quotient_space(P, cls, name=name)
    reps = [next(i for i in range(P.n) if cls[i] == c) for c in range(Z.n)]

    def lact(g, z):
        xi, eta = P.coords[reps[z]]
        return cls[P.coord_index[(x.left.apply(g, xi), eta)]]

    def ract(z, k):
        xi, eta = P.coords[reps[z]]
        v = y.ract(eta, k)
        return None if v is None else cls[P.coord_index[(xi, v)]]

    pz = [x.p.fn[P.coords[r][0]] for r in reps]
    qz = [y.q.fn[P.coords[r][1]] for r in reps]
    members = [[m1 + m2 for i in range(P.n) if cls[i] == c
                for m1 in x.members[P.coords[i][0]] for m2 in y.members[P.coords[i][1]]] for c in range(Z.n)]
    comp = make_bilocale(x.G, y.H, Z, pz, lact, qz, ract, name=name)
    comp.members = members
    # well-definedness of the induced actions on classes
    out = Outcome(f"compose {name}")
    w = None
    for i, (xi, eta) in enumerate(P.coords):
        for g in range(x.G.G1.n):
            v = x.left.apply(g, xi)
            if v is not None and cls[P.coord_index[(v, eta)]] != comp.left.apply(g, cls[i]):
                w = ("left", x.G.G1.points[g], P.points[i])
                break
        for k in range(y.H.G1.n):
            v = y.ract(eta, k)
            if v is not None and cls[P.coord_index[(xi, v)]] != comp.ract(cls[i], k):
                w = ("right", P.points[i], y.H.G1.points[k])
                break
        if w:
            break
    out.add(verdict("compose.well-defined", w))
    # frame description against the spatial coequalizer
    T = _middle_tensor(x, y)
    sub = pairing_subframe(T, x, y, triples)
    canon = canonical_pullback_map(T, [lambda v: _coord_mask(P, 0, x.X.frame.masks[v]),
                                       lambda v: _coord_mask(P, 1, y.X.frame.masks[v])])
    elems = T.elements(MAX_ELEMENTS)
    images = [canon(e) for e in elems]
    opens_P = set(P.opens())
    w = None
    if len(set(images)) != len(images) or set(images) != opens_P:
        w = ("tensor is not O(X×Y)", len(elems), len(opens_P))
    out.add(passed("compose.quotient-identification") if w is None else incident("compose.quotient-identification", w))
    sat = sorted(quo.preimage(u) for u in Z.opens())
    got = sorted(canon(e) for e in sub)
    if got == sat:
        out.add(passed("compose.subframe-coequalizer"))
    else:
        diff = sorted(set(got) ^ set(sat))
        out.add(incident("compose.subframe-coequalizer", (P.set_label(diff[0]),),
                         "equalizing subframe differs from the saturated opens"))
    return Composition(comp, T, sub, P, cls, out)


def _coord_mask(P: FinSpace, i: int, mask: int) -> int:
    out = 0
    for k, c in enumerate(P.coords):
        if mask >> c[i] & 1:
            out |= 1 << k
    return out


def check_tensor_agreement(x: Bilocale, y: Bilocale, cd: CoverData) -> Outcome:
    """The equalizing subframe over Ĥ (lifted actions) equals the one over H."""
    H = x.H
    if cd.G is not H or y.G is not H:
        raise UsageError("cover must be of the middle groupoid")
    out = Outcome(f"tensor agreement {x.name}, {y.name}")
    T = _middle_tensor(x, y)
    base = pairing_subframe(T, x, y, _triples(x, y, H, x.ract, y.left.apply))
    Hh = cd.Ghat
    J1 = cd.J1.fn

    def rhat(xi, h):
        return x.ract(xi, J1[h])

    def lhat(h, eta):
        return y.left.apply(J1[h], eta)

    lifted = pairing_subframe(T, x, y, _triples(x, y, Hh, rhat, lhat))
    out.data["size"] = len(base)
    if base == lifted:
        out.add(passed("tensor-agreement"))
    else:
        diff = sorted(set(base) ^ set(lifted))
        out.add(incident("tensor-agreement", (T.describe(diff[0]),), "subframes over H and its cover differ"))
    return out


def composite_iso(a: Bilocale, b: Bilocale) -> tuple | None:
    """None when the member partitions match and the matching is an isomorphism of bilocales."""
    where = {}
    for j, ms in enumerate(b.members):
        for m in ms:
            where[m] = j
    iso = []
    for i, ms in enumerate(a.members):
        targets = {where.get(m) for m in ms}
        if len(targets) != 1 or None in targets:
            return ("classes differ", a.X.points[i])
        j = targets.pop()
        if set(b.members[j]) != set(ms):
            return ("classes differ", a.X.points[i])
        iso.append(j)
    if sorted(iso) != list(range(b.X.n)):
        return ("not a bijection",)
    if not (a.X.leq == b.X.leq[np.ix_(iso, iso)]).all():
        return ("not a homeomorphism",)
    for i in range(a.X.n):
        if b.p.fn[iso[i]] != a.p.fn[i] or b.q.fn[iso[i]] != a.q.fn[i]:
            return ("anchors", a.X.points[i])
        for g in range(a.G.G1.n):
            v = a.left.apply(g, i)
            if v is not None and iso[v] != b.left.apply(g, iso[i]):
                return ("left action", a.G.G1.points[g], a.X.points[i])
        for k in range(a.H.G1.n):
            v = a.ract(i, k)
            if v is not None and iso[v] != b.ract(iso[i], k):
                return ("right action", a.X.points[i], a.H.G1.points[k])
    return None


def associativity_smoke(x: Bilocale, y: Bilocale, z: Bilocale) -> Outcome:
    out = Outcome(f"associativity {x.name}, {y.name}, {z.name}")
    for tag, b in (("x", x), ("y", y), ("z", z)):
        rep = validate_bilocale(b)
        c = rep.first_failure()
        out.add(passed(f"input.{tag}") if c is None else failed(f"input.{tag}", (c.name, c.witness)))
    if not out.passed:
        return out
    left = tensor_compose(tensor_compose(x, y).bilocale, z).bilocale
    right = tensor_compose(x, tensor_compose(y, z).bilocale).bilocale
    out.add(verdict("associativity.iso", composite_iso(left, right)))
    return out


# -- quantale side ----------------------------------------------------------------------

def quantale_side(b: Bilocale, cdG: CoverData | None = None, cdH: CoverData | None = None) -> Outcome:
    """Frame-level bimodule checks on the lifted actions."""
    out = Outcome(f"quantale side {b.name}")
    cdG = cdG or _default_cover(b.G)
    cdH = cdH or _default_cover(b.H)
    if cdG is None or cdH is None:
        out.add(skipped("quantale-side", "a groupoid is not coverable"))
        return out
    ml = module_of(lift_action(b.left, cdG))
    mr = module_of(lift_action(b.right_as_left(), cdH))
    out.extend(check_module(ml), prefix="left")
    out.extend(check_module(mr), prefix="right")
    X = ml.X
    # the two actions commute: (a·v)·c = a·(v·c) with v·c = c*⋆v
    w = None
    inv = mr.Q.inv
    for a in range(ml.Q.n):
        for c in range(mr.Q.n):
            lhs = mr.table[inv[c]][ml.table[a]]
            rhs = ml.table[a][mr.table[inv[c]]]
            bad = np.flatnonzero(lhs != rhs)
            if len(bad):
                w = (ml.Q.label(a), mr.Q.label(c), X.label(bad[0]))
                break
        if w:
            break
    out.add(verdict("bimodule.commute", w))
    # each action preserves the other side's base restriction
    out.add(verdict("bimodule.q-invariant", _restriction_witness(ml, mr.lres, "q")))
    out.add(verdict("bimodule.p-invariant", _restriction_witness(mr, ml.lres, "p")))
    for tag, a, cd in (("left", b.left, cdG), ("right", b.right_as_left(), cdH)):
        if cd.kind == "trivial":
            continue
        o = check_O_locale(lift_action(a, cd), ieqf_from_cover(cd))
        out.extend(o.checks, prefix=tag)
    return out


def _restriction_witness(m, lres, tag):
    X = m.X
    for a in range(m.Q.n):
        for c in range(lres.shape[0]):
            lhs = m.table[a][lres[c]]
            rhs = lres[c][m.table[a]]
            bad = np.flatnonzero(lhs != rhs)
            if len(bad):
                return (m.Q.label(a), X.label(bad[0]))
    return None


def check_correspondence(b: Bilocale, cdG: CoverData | None = None, cdH: CoverData | None = None) -> Outcome:
    """Groupoid-side and quantale-side verdicts must coincide."""
    g = validate_bilocale(b)
    q = quantale_side(b, cdG, cdH)
    out = Outcome(f"correspondence {b.name}")
    out.data["groupoid"] = g.passed
    out.data["quantale"] = q.passed
    if any(c.status == "skipped" and c.name == "quantale-side" for c in q):
        out.add(skipped("correspondence", "a groupoid is not coverable"))
    elif g.passed == q.passed:
        out.add(passed("correspondence"))
    else:
        gf, qf = g.first_failure(), q.first_failure()
        out.add(incident("correspondence", (gf and gf.name, qf and qf.name), "groupoid and quantale verdicts differ"))
    return out


def check_bilocale_map(f: CMap, a: Bilocale, b: Bilocale) -> Outcome:
    """Equivariance on both sides, pointwise and as module maps."""
    out = Outcome(f"bilocale map {f.name}")
    out.extend(check_equivariant(f, a.left, b.left).checks, prefix="left")
    out.extend(check_equivariant(f, a.right_as_left(), b.right_as_left()).checks, prefix="right")
    return out


def composite_O_locales(c: Bilocale, cdG: CoverData | None = None, cdK: CoverData | None = None) -> Outcome:
    """The composite's lifted outer actions are O-locales."""
    out = Outcome(f"composite O-locales {c.name}")
    for tag, a, cd in (("left", c.left, cdG or _default_cover(c.G)), ("right", c.right_as_left(),
                                                                       cdK or _default_cover(c.H))):
        if cd is None:
            out.add(skipped(tag, "groupoid is not coverable"))
            continue
        o = check_O_locale(lift_action(a, cd), ieqf_from_cover(cd))
        out.extend(o.checks, prefix=tag)
    return out
