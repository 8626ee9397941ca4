"""Groupoid actions on finite spaces, their quantale modules, lifting and descent.

An action of G on X is an anchor p : X → G0 with a continuous act on
G1 ×_{G0} X = {(g, x) : d(g) = p(x)}.  Everything quantale-side is derived
from the point tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .checks import Check, Outcome, failed, first_index, incident, passed, skipped, verdict
from .cover import CoverData, IEQFData, bisection_action, embedding_j, germ_cover, trivial_cover
from .errors import NotCoverableError, StructuralError, UsageError
from .groupoid import FinGroupoid, bilinear_table, oquantale, validate_groupoid
from .locale import CMap, FinSpace, bits, continuity_witness, pullback, quotient_space
from .quantale import Quantale, join_many, partial_units
from .suplat import SupLattice
from .tensor import BaseAction, TensorLattice, canonical_pullback_map


@dataclass(eq=False)
class GAction:
    G: FinGroupoid
    X: FinSpace
    p: CMap
    act: CMap
    name: str = ""

    @property
    def GX(self) -> FinSpace:
        return self.act.source

    def apply(self, g: int, x: int) -> int | None:
        k = self.GX.coord_index.get((g, x))
        return None if k is None else self.act.fn[k]


def make_action(G: FinGroupoid, X: FinSpace, p, act, name: str = "") -> GAction:
    """``p`` lists anchor point ids (or maps labels); ``act`` is a callable (g, x) -> x or a label dict."""
    if isinstance(p, dict):
        p = CMap.from_labels(X, G.G0, p, name="p")
    elif not isinstance(p, CMap):
        p = CMap(X, G.G0, p, name="p")
    GX, _, _ = pullback(G.d, p, name=f"{G.G1.name}×{X.name}")
    table = []
    for g, x in GX.coords:
        if isinstance(act, dict):
            key = (G.G1.points[g], X.points[x])
            if key not in act:
                raise StructuralError(f"action {name!r} undefined at {key}")
            table.append(X[act[key]])
        else:
            table.append(int(act(g, x)))
    return GAction(G, X, p, CMap(GX, X, table, name="act"), name=name)


# -- builders --------------------------------------------------------------------------

def anchor_action(G: FinGroupoid, name: str = "") -> GAction:
    """G acting on G0 by g·d(g) = r(g)."""
    return make_action(G, G.G0, list(range(G.G0.n)), lambda g, x: G.r.fn[g], name=name or f"{G.name} on G0")


def regular_action(G: FinGroupoid, X: FinSpace | None = None, name: str = "") -> GAction:
    """G acting on its arrows by left multiplication, anchored by r; X may retopologize G1."""
    X = X or G.G1
    if X.points != G.G1.points:
        raise StructuralError("regular action carrier must have the arrows as points")
    return make_action(G, X, list(G.r.fn), lambda g, h: G.mul(g, h), name=name or f"regular {G.name}")


def group_action(G: FinGroupoid, X: FinSpace, perm: dict, name: str = "") -> GAction:
    """A group (one object) acting through ``perm[g] = {x: g·x}`` on labels."""
    if G.G0.n != 1:
        raise UsageError("group_action needs a one-object groupoid")
    table = {(g, x): perm[g][x] for g in G.G1.points for x in X.points}
    return make_action(G, X, [0] * X.n, table, name=name)


# -- validation ---------------------------------------------------------------------

def validate_action(a: GAction) -> Outcome:
    G, X = a.G, a.X
    out = Outcome(a.name)
    out.add(verdict("action.anchor-continuous", continuity_witness(a.p)))
    out.add(verdict("action.continuous", continuity_witness(a.act)))
    w = None
    for k, (g, x) in enumerate(a.GX.coords):
        if a.p.fn[a.act.fn[k]] != G.r.fn[g]:
            w = (G.G1.points[g], X.points[x])
            break
    out.add(verdict("action.pullback", w))
    w = None
    for x in range(X.n):
        if a.apply(G.u.fn[a.p.fn[x]], x) != x:
            w = (X.points[x],)
            break
    out.add(verdict("action.unitarity", w))
    w = None
    if out["action.pullback"].passed:
        for k, (g, h) in enumerate(G.G2.coords):
            for x in range(X.n):
                if a.p.fn[x] != G.d.fn[h]:
                    continue
                lhs = a.apply(G.m.fn[k], x)
                rhs = a.apply(g, a.apply(h, x))
                if lhs != rhs:
                    w = (G.G1.points[g], G.G1.points[h], X.points[x])
                    break
            if w:
                break
        out.add(verdict("action.associativity", w))
    else:
        out.add(skipped("action.associativity", "anchor square fails"))
    return out


# -- modules --------------------------------------------------------------------------

@dataclass(eq=False)
class QModuleData:
    """``table[a, v]`` = a·v over Q; ``lres[b, v]`` = b◁v for the base locale."""

    Q: Quantale
    X: SupLattice
    table: np.ndarray
    lres: np.ndarray | None = None
    name: str = ""


def module_of(a: GAction, Q: Quantale | None = None) -> QModuleData:
    """A·V = act-image of A ×_{G0} V, over O(G)."""
    G, X = a.G, a.X
    Q = Q or oquantale(G)
    LX = X.frame

    def gen(A, V):
        out = 0
        for k, (g, x) in enumerate(a.GX.coords):
            if A >> g & 1 and V >> x & 1:
                out |= 1 << a.act.fn[k]
        return out

    table = bilinear_table(G.G1.frame, LX, LX, gen, "module action")
    B = G.G0.frame
    lres = np.array([[LX._mask_index[v & a.p.preimage(b)] for v in LX.masks] for b in B.masks], dtype=np.int64)
    return QModuleData(Q, LX, table, lres, name=f"O({a.name})")


def check_module(m: QModuleData) -> list[Check]:
    Q, X, t = m.Q, m.X, m.table
    out = []
    if Q.unit is not None:
        bad = np.flatnonzero(t[Q.unit] != np.arange(X.n))
        out.append(verdict("module.unit", None if len(bad) == 0 else (X.label(bad[0]),)))
    w = None
    for a in range(Q.n):
        hit = first_index(t[Q.mult[a]] != t[a][t])
        if hit is not None:
            w = (Q.label(a), Q.label(hit[0]), X.label(hit[1]))
            break
    out.append(verdict("module.associative", w))
    from .cover import _bimorphism
    out.append(verdict("module.joins", _bimorphism(Q.L, X, X, t)))
    return out


def module_tensor(m: QModuleData) -> TensorLattice:
    """O(G1) ⊗_B X with B acting on the left factor along d and on X along the anchor."""
    if m.lres is None or m.Q.based is None:
        raise UsageError("module tensor needs base actions")
    return TensorLattice([m.Q.L, m.X], [BaseAction(m.Q.B, m.Q.based.rres, m.lres)], name=f"{m.Q.name}⊗{m.X.name}")


def act_inverse_image(a: GAction, x: int, m: QModuleData | None = None) -> dict:
    """a*(x) by ⋁{A⊗V : A·V <= x}, the partial-unit formula when G is étale, and the spatial preimage."""
    m = m or module_of(a)
    T = module_tensor(m)
    J = np.array(T.J[0], dtype=np.int64)
    K = np.array(T.J[1], dtype=np.int64)
    general = T.from_array(m.X.leq[m.table[np.ix_(J, K)], x])
    res = {"general": general, "tensor": T}
    if validate_groupoid(a.G).etale:
        Q = m.Q
        acc = 0
        for s in partial_units(Q):
            acc |= T.rect([s, int(m.table[Q.inv[s], x])])
        res["partial-units"] = T.closure(acc) if acc else T.bottom
    G, X = a.G, a.X
    canon = canonical_pullback_map(T, [lambda A: _coord_set(a, 0, G.G1.frame.masks[A]),
                                       lambda V: _coord_set(a, 1, m.X.masks[V])])
    res["spatial"] = a.act.preimage(m.X.masks[x])
    res["canonical"] = canon(general)
    return res


def _coord_set(a: GAction, i: int, mask: int) -> int:
    out = 0
    for k, c in enumerate(a.GX.coords):
        if mask >> c[i] & 1:
            out |= 1 << k
    return out


def check_act_inverse_image(a: GAction) -> list[Check]:
    m = module_of(a)
    w1 = w2 = None
    for x in range(m.X.n):
        r = act_inverse_image(a, x, m)
        if w1 is None and "partial-units" in r and r["partial-units"] != r["general"]:
            w1 = (m.X.label(x),)
        if w2 is None and r["canonical"] != r["spatial"]:
            w2 = (m.X.label(x),)
    out = [verdict("inverse-image.spatial", w2)]
    if validate_groupoid(a.G).etale:
        out.append(incident("inverse-image.partial-units", w1) if w1 else passed("inverse-image.partial-units"))
    return out


# -- lifting and descent --------------------------------------------------------------

def lift_action(a: GAction, cd: CoverData) -> GAction:
    """(X, J0⁻¹∘p, act∘(J1×id)) as an action of Ĝ."""
    if cd.G is not a.G:
        raise UsageError("cover and action belong to different groupoids")
    inv0 = {v: k for k, v in enumerate(cd.J0.fn)}
    p = [inv0[v] for v in a.p.fn]
    return make_action(cd.Ghat, a.X, p, lambda g, x: a.apply(cd.J1.fn[g], x), name=f"lift({a.name})")


@dataclass
class DescentResult:
    ok: bool
    action: GAction | None = None
    witness: tuple | None = None
    checks: list = field(default_factory=list)


def check_descent(xhat: GAction, cd: CoverData) -> DescentResult:
    """β with act̂ = β∘(J1×id), found fibre by fibre and then tested for continuity."""
    G, Gh, X = cd.G, cd.Ghat, xhat.X
    if xhat.G is not Gh:
        raise UsageError("the action must be by the covering groupoid")
    p = CMap(X, G.G0, [cd.J0.fn[v] for v in xhat.p.fn], name="p")
    GX, _, _ = pullback(G.d, p)
    fibre: dict[tuple, tuple] = {}
    for k, (gh, x) in enumerate(xhat.GX.coords):
        key = (cd.J1.fn[gh], x)
        val = xhat.act.fn[k]
        if key in fibre and fibre[key][1] != val:
            g0 = fibre[key][0]
            w = ("not constant on a fibre", Gh.G1.points[g0], Gh.G1.points[gh], X.points[x])
            return DescentResult(False, None, w)
        fibre.setdefault(key, (gh, val))
    table = []
    for g, x in GX.coords:
        if (g, x) not in fibre:
            return DescentResult(False, None, ("no lift", G.G1.points[g], X.points[x]))
        table.append(fibre[(g, x)][1])
    beta = CMap(GX, X, table, name="β")
    cw = continuity_witness(beta)
    if cw is not None:
        return DescentResult(False, None, ("β not continuous",) + tuple(cw))
    a = GAction(G, X, p, beta, name=f"descent({xhat.name})")
    rep = validate_action(a)
    checks = [] if rep.passed else [incident("descent.action", rep.first_failure().witness,
                                             "descended map is not an action")]
    return DescentResult(True, a, None, checks)


# -- O-locales ------------------------------------------------------------------------

def _alpha_star(m: QModuleData, T: TensorLattice, x: int) -> int:
    J = np.array(T.J[0], dtype=np.int64)
    K = np.array(T.J[1], dtype=np.int64)
    return T.from_array(m.X.leq[m.table[np.ix_(J, K)], x])


def check_O_locale(x, ieq: IEQFData) -> Outcome:
    """Whether α_* : X → Q̂⊗_B X factors through j⊗id : O⊗_B X → Q̂⊗_B X.

    ``x`` is an action of the covering groupoid (then descent is cross-checked)
    or a module over Q̂ given directly.
    """
    Q, O = ieq.Qhat, ieq.O
    out = Outcome(f"O-locale {getattr(x, 'name', '')}")
    if isinstance(x, GAction):
        m = module_of(x, Q)
    else:
        m = x
    if m.Q is not Q and m.Q.L.labels != Q.L.labels:
        raise UsageError("module is over a different quantale")
    out.extend(check_module(m))
    Od = ieq.derived()
    T = TensorLattice([Q.L, m.X], [BaseAction(Q.B, Q.based.rres, m.lres)], name="Q̂⊗X")
    S = TensorLattice([O.L, m.X], [BaseAction(Q.B, Od.based.rres, m.lres)], name="O⊗X")
    jt = ieq.jt
    gens = [(xs, T.rect([int(jt[xs[0]]), xs[1]])) for xs in S.point_generators()]
    factor = {}
    w = None
    for v in range(m.X.n):
        t = _alpha_star(m, T, v)
        if Q.unit is not None:
            acc = 0
            for s in partial_units(Q):
                acc |= T.rect([s, int(m.table[Q.inv[s], v])])
            su = T.closure(acc) if acc else T.bottom
            if su != t:
                out.add(incident("O-locale.partial-unit-formula", (m.X.label(v),)))
        below = [(xs, g) for xs, g in gens if g & ~t == 0]
        acc = 0
        for _, g in below:
            acc |= g
        hit = (T.closure(acc) if acc else T.bottom) == t
        if not hit:
            if w is None:
                w = (m.X.label(v), T.describe(t))
            continue
        pre = 0
        for xs, _ in below:
            pre |= S.rect(list(xs))
        factor[v] = S.closure(pre) if pre else S.bottom
    out.add(verdict("O-locale.factors", w))
    out.data["factorization"] = factor if w is None else None
    out.data["alpha_star_tensor"] = T
    if isinstance(x, GAction) and ieq.cover is not None:
        dr = check_descent(x, ieq.cover)
        out.extend(dr.checks)
        agree = dr.ok == (w is None)
        out.add(passed("O-locale.descent-agreement") if agree else
                incident("O-locale.descent-agreement", dr.witness or w, "descent and O-locale verdicts disagree"))
        if dr.ok and agree:
            out.add(_lax_check(ieq, m, module_of(dr.action, O)))
    else:
        out.add(skipped("O-locale.descent-agreement", "module given without a space"))
    return out


def _lax_check(ieq: IEQFData, mq: QModuleData, mo: QModuleData) -> Check:
    """j(a)x <= ax for a in O, x in X."""
    X = mq.X
    lhs = mq.table[ieq.jt]  # [a, x]
    rhs = mo.table
    hit = first_index(~X.leq[lhs, rhs])
    if hit is None:
        return passed("O-locale.lax")
    return incident("O-locale.lax", (ieq.O.label(hit[0]), X.label(hit[1])))


# -- invariants and orbits ------------------------------------------------------------

def _default_cover(G: FinGroupoid) -> CoverData | None:
    if validate_groupoid(G).etale:
        return trivial_cover(G)
    try:
        return germ_cover(G)
    except NotCoverableError:
        return None


def invariants_and_orbit(a: GAction, cd: CoverData | None = None) -> Outcome:
    G, X = a.G, a.X
    out = Outcome(f"invariants {a.name}")
    m = module_of(a)
    O = m.Q
    IO = [v for v in range(m.X.n) if m.table[O.one, v] == v]
    out.data["invariant"] = IO
    out.data["invariant_labels"] = [m.X.label(v) for v in IO]
    cd = cd or _default_cover(G)
    if cd is None:
        out.add(skipped("invariants.cover", "groupoid is not coverable"))
    else:
        mh = module_of(lift_action(a, cd))
        Qh = mh.Q
        IQ = [v for v in range(mh.X.n) if mh.table[Qh.one, v] == v]
        sub = set(IO) <= set(IQ)
        out.add(passed("invariants.O-in-Qhat") if sub else
                incident("invariants.O-in-Qhat", (m.X.label(min(set(IO) - set(IQ))),)))
        eq = set(IO) == set(IQ)
        out.add(passed("invariants.equal") if eq else
                incident("invariants.equal", (m.X.label(min(set(IO) ^ set(IQ))),)))
    # spatial orbits
    parent = list(range(X.n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for k, (g, x) in enumerate(a.GX.coords):
        ra, rb = find(x), find(a.act.fn[k])
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(i) for i in range(X.n)})
    cls = [roots.index(find(i)) for i in range(X.n)]
    Qs, qmap = quotient_space(X, cls, name=f"{X.name}/{G.name}")
    sat = sorted(m.X._mask_index[qmap.preimage(u)] for u in Qs.opens())
    out.add(passed("orbits.spatial") if sat == sorted(IO) else
            incident("orbits.spatial", tuple(m.X.label(v) for v in sorted(set(sat) ^ set(IO)))[:1]))
    out.data["orbit_space"] = Qs
    out.data["orbit_lattice_size"] = len(IO)
    return out


# -- equivariant maps ---------------------------------------------------------------

def check_equivariant(f: CMap, a: GAction, b: GAction, cd: CoverData | None = None) -> Outcome:
    """Pointwise G-equivariance, equivariance of the lifts, and f* as a module map; all must agree."""
    if a.G is not b.G:
        raise UsageError("actions of different groupoids")
    G = a.G
    out = Outcome(f"equivariant {f.name}")

    def pointwise(x_act: GAction, y_act: GAction) -> tuple | None:
        cw = continuity_witness(f)
        if cw is not None:
            return ("not continuous",) + tuple(cw)
        for x in range(x_act.X.n):
            if y_act.p.fn[f.fn[x]] != x_act.p.fn[x]:
                return ("anchor", x_act.X.points[x])
        for k, (g, x) in enumerate(x_act.GX.coords):
            if f.fn[x_act.act.fn[k]] != y_act.apply(g, f.fn[x]):
                return (x_act.G.G1.points[g], x_act.X.points[x])
        return None

    w1 = pointwise(a, b)
    out.add(verdict("equivariant.G", w1))
    cd = cd or _default_cover(G)
    if cd is None:
        out.add(skipped("equivariant.lift", "groupoid is not coverable"))
        out.add(skipped("equivariant.module", "groupoid is not coverable"))
        return out
    la, lb = lift_action(a, cd), lift_action(b, cd)
    w2 = pointwise(la, lb)
    out.add(verdict("equivariant.lift", w2))
    w3 = None
    if continuity_witness(f) is not None:
        w3 = ("not continuous",)
    else:
        ma, mb = module_of(la), module_of(lb)
        fstar = np.array([ma.X._mask_index[f.preimage(v)] for v in mb.X.masks], dtype=np.int64)
        hit = first_index(fstar[mb.table] != ma.table[:, fstar])
        if hit is not None:
            w3 = (ma.Q.label(hit[0]), mb.X.label(hit[1]))
        else:
            bad = first_index(fstar[mb.lres] != ma.lres[:, fstar])
            if bad is not None:
                w3 = ("base", G.G0.frame.label(bad[0]), mb.X.label(bad[1]))
    out.add(verdict("equivariant.module", w3))
    verdicts = {w1 is None, w2 is None, w3 is None}
    if len(verdicts) > 1:
        out.add(incident("equivariant.agreement", w1 or w2 or w3, "the three equivariance checks disagree"))
    return out
