"""Local bisections, germ covers and inverse-embedded quantal frames.

A local bisection of G is an open U of G0 with a continuous section σ of d over
U whose composite r∘σ is an open embedding.  The germ of σ at x is its
restriction to the minimal open neighbourhood ↑x; germs form the arrows of an
étale groupoid Ĝ over G0 with a functor J : Ĝ → G sending a germ to its value.
Preimage along J1 embeds O(G) into O(Ĝ).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .checks import Check, Outcome, failed, first_index, incident, passed, skipped, verdict
from .errors import CapacityError, CoverDefectError, NotCoverableError, StructuralError, UsageError
from .groupoid import FinGroupoid, bilinear_table, oquantale, validate_groupoid
from .locale import (CMap, FinSpace, bits, continuity_witness, epi_witness, frame_epi_witness, identity_map,
                     pair_map, pullback)
from .quantale import (BasedStructure, Quantale, classify, check_equivariant, check_supported, join_many,
                       partial_units, right_sided)
from .suplat import (MonotoneMap, SupMap, join_witness, law_witness, meet_witness, right_adjoint,
                     rows_preserve_joins)
from .tensor import BaseAction, TensorLattice, map_tensor, tensor_injective

MAX_SECTIONS = 1 << 16


# -- bisections ---------------------------------------------------------------------

@dataclass(frozen=True)
class Bisection:
    """``values[x]`` is σ(x) for x in the domain and -1 elsewhere."""

    domain: int
    values: tuple

    def __call__(self, x: int) -> int:
        v = self.values[x]
        if v < 0:
            raise UsageError(f"point {x} is outside the bisection domain")
        return v

    def points(self) -> list[int]:
        return list(bits(self.domain))

    def image(self) -> int:
        out = 0
        for x in bits(self.domain):
            out |= 1 << self.values[x]
        return out

    def restrict(self, mask: int) -> "Bisection":
        mask &= self.domain
        return Bisection(mask, tuple(v if mask >> x & 1 else -1 for x, v in enumerate(self.values)))

    def describe(self, G: FinGroupoid) -> dict:
        return {G.G0.points[x]: G.G1.points[self.values[x]] for x in bits(self.domain)}


def bisection_witness(G: FinGroupoid, domain: int, values) -> tuple | None:
    """Why (domain, values) is not a local bisection, or None."""
    S0, S1 = G.G0, G.G1
    if not S0.is_open(domain):
        return ("domain not open", S0.set_label(domain))
    pts = list(bits(domain))
    for x in pts:
        if values[x] < 0 or G.d.fn[values[x]] != x:
            return ("not a section of d", S0.points[x])
    for x in pts:
        for y in pts:
            if S0.leq[x, y] and not S1.leq[values[x], values[y]]:
                return ("not continuous", S0.points[x], S0.points[y])
    rs = {x: G.r.fn[values[x]] for x in pts}
    for x, y in itertools.combinations(pts, 2):
        if rs[x] == rs[y]:
            return ("r∘σ not injective", S0.points[x], S0.points[y])
    for x in pts:
        for y in pts:
            if S0.leq[rs[x], rs[y]] and not S0.leq[x, y]:
                return ("r∘σ not an embedding", S0.points[x], S0.points[y])
    img = 0
    for v in rs.values():
        img |= 1 << v
    if not S0.is_open(img):
        return ("r∘σ image not open", S0.set_label(img))
    return None


def bisections(G: FinGroupoid, limit: int = MAX_SECTIONS) -> list[Bisection]:
    """Every local bisection, ordered by domain size, domain and values."""
    fibres = [[g for g in range(G.G1.n) if G.d.fn[g] == x] for x in range(G.G0.n)]
    out = []
    for U in G.G0.opens():
        pts = list(bits(U))
        count = 1
        for x in pts:
            count *= len(fibres[x])
        if count > limit:
            raise CapacityError(f"{count} candidate sections over {G.G0.set_label(U)} exceed the limit {limit}")
        for choice in itertools.product(*(fibres[x] for x in pts)):
            vals = [-1] * G.G0.n
            for x, g in zip(pts, choice):
                vals[x] = g
            if bisection_witness(G, U, vals) is None:
                out.append(Bisection(U, tuple(vals)))
    out.sort(key=lambda b: (bin(b.domain).count("1"), b.domain, b.values))
    return out


def compose_bisections(G: FinGroupoid, s: Bisection, t: Bisection) -> Bisection:
    """(s∘t)(y) = s(r t y)·t(y) wherever it is defined."""
    vals = [-1] * G.G0.n
    dom = 0
    for y in bits(t.domain):
        x = G.r.fn[t.values[y]]
        if s.domain >> x & 1:
            vals[y] = G.mul(s.values[x], t.values[y])
            dom |= 1 << y
    return Bisection(dom, tuple(vals))


def unit_bisection(G: FinGroupoid) -> Bisection:
    return Bisection(G.G0.full, tuple(G.u.fn))


def coverability(G: FinGroupoid, bis: list[Bisection] | None = None) -> Check:
    """Every arrow lies in the image of some local bisection."""
    bis = bisections(G) if bis is None else bis
    covered = 0
    for b in bis:
        covered |= b.image()
    for g in range(G.G1.n):
        if not covered >> g & 1:
            return failed("cover.coverable", (G.G1.points[g],), "arrow lies in no local bisection")
    return passed("cover.coverable")


# -- covers ------------------------------------------------------------------------

@dataclass(eq=False)
class CoverData:
    G: FinGroupoid
    Ghat: FinGroupoid
    J0: CMap
    J1: CMap
    kind: str = "custom"
    name: str = ""
    germs: list = field(default_factory=list)
    _j: tuple | None = None

    def j(self) -> SupMap:
        return embedding_j(self)[0]

    def jstar(self) -> MonotoneMap:
        return embedding_j(self)[1]


def _germ_labels(G: FinGroupoid, keys: list[tuple]) -> list[str]:
    labels = []
    seen: dict[str, int] = {}
    for x, vals in keys:
        base = G.G1.points[vals[0][1] if vals[0][0] == x else dict(vals)[x]]
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base] - 1}")
    return labels


def germ_cover(G: FinGroupoid) -> CoverData:
    """The étale groupoid of germs of local bisections, with J1 = value at the base point."""
    rep = validate_groupoid(G)
    if not rep.open:
        raise UsageError(f"germ cover needs an open groupoid; {G.name} fails {rep.outcome.first_failure().name}")
    bis = bisections(G)
    c = coverability(G, bis)
    if not c.passed:
        raise NotCoverableError(f"arrow {c.witness[0]} of {G.name} lies in no local bisection", c.witness[0])
    S0 = G.G0
    keys = set()
    for b in bis:
        for x in bits(b.domain):
            nb = S0.up[x]
            keys.add((x, tuple((y, b.values[y]) for y in bits(nb))))
    keys = sorted(keys, key=lambda k: (k[0], dict(k[1])[k[0]], k[1]))
    index = {k: n for n, k in enumerate(keys)}
    value = [dict(k[1])[k[0]] for k in keys]
    n = len(keys)
    leq = np.zeros((n, n), dtype=bool)
    for a, (x, vals) in enumerate(keys):
        vx = dict(vals)
        for y in bits(S0.up[x]):
            k = (y, tuple((z, vx[z]) for z in bits(S0.up[y])))
            leq[a, index[k]] = True
    G1h = FinSpace(_germ_labels(G, keys), leq, name=f"germs({G.name})")

    def key_of(x, fn):
        return index[(x, tuple((z, fn(z)) for z in bits(S0.up[x])))]

    def mult(a, b):
        (x, sv), (y, tv) = keys[a], keys[b]
        s, t = dict(sv), dict(tv)
        try:
            return key_of(y, lambda z: G.mul(s[G.r.fn[t[z]]], t[z]))
        except KeyError:
            raise StructuralError(f"germ product {G1h.points[a]}·{G1h.points[b]} is not a germ") from None

    def inverse(a):
        x, tv = keys[a]
        t = dict(tv)
        back = {G.r.fn[g]: G.i.fn[g] for g in t.values()}
        return key_of(G.r.fn[t[x]], lambda w: back[w])

    dh = [k[0] for k in keys]
    rh = [G.r.fn[v] for v in value]
    unit = [key_of(x, lambda z: G.u.fn[z]) for x in range(S0.n)]
    Ghat = FinGroupoid(S0, G1h, dh, rh, mult, [inverse(a) for a in range(n)], unit, name=f"germ({G.name})")
    J1 = CMap(G1h, G.G1, value, name="J1")
    return CoverData(G, Ghat, identity_map(S0), J1, kind="germ", name=f"germ cover of {G.name}", germs=keys)


def trivial_cover(G: FinGroupoid) -> CoverData:
    """An étale groupoid covers itself by the identity functor."""
    rep = validate_groupoid(G)
    if not rep.etale:
        raise UsageError(f"trivial cover needs an étale groupoid; {G.name} is not étale")
    return CoverData(G, G, identity_map(G.G0), identity_map(G.G1), kind="trivial", name=f"trivial cover of {G.name}")


def make_cover(G: FinGroupoid, Ghat: FinGroupoid, J0: dict, J1: dict, name: str = "") -> CoverData:
    """A user-supplied cover given by label tables."""
    return CoverData(G, Ghat, CMap.from_labels(Ghat.G0, G.G0, J0, name="J0"),
                     CMap.from_labels(Ghat.G1, G.G1, J1, name="J1"), kind="custom", name=name or f"cover of {G.name}")


def embedding_j(cd: CoverData) -> tuple[SupMap, MonotoneMap]:
    """j = J1-preimage : O(G1) → O(Ĝ1) and its right adjoint j_*."""
    if cd._j is not None:
        return cd._j
    w = continuity_witness(cd.J1)
    if w is not None:
        raise CoverDefectError(f"J1 is not continuous at {w}", w)
    L, Lh = cd.G.G1.frame, cd.Ghat.G1.frame
    table = [Lh._mask_index[cd.J1.preimage(m)] for m in L.masks]
    seen: dict[int, int] = {}
    for a, v in enumerate(table):
        if v in seen:
            wit = (L.label(seen[v]), L.label(a))
            raise CoverDefectError(f"j identifies {wit[0]} and {wit[1]}", wit)
        seen[v] = a
    j = SupMap(L, Lh, table, name="j")
    cd._j = (j, right_adjoint(j))
    return cd._j


def j_by_bisections(cd: CoverData) -> list[int]:
    """j(q) as the union of germs of the bisections σ of G with σ(U) ⊆ q (germ covers only)."""
    G, Gh = cd.G, cd.Ghat
    Lh = Gh.G1.frame
    bis = bisections(G)
    pts = cd.germs
    index = {k: n for n, k in enumerate(pts)}
    opens = []
    for b in bis:
        m = 0
        for x in bits(b.domain):
            m |= 1 << index[(x, tuple((y, b.values[y]) for y in bits(G.G0.up[x])))]
        opens.append((b.image(), m))
    out = []
    for q in G.G1.frame.masks:
        acc = 0
        for img, m in opens:
            if img & ~q == 0:
                acc |= m
        out.append(Lh._mask_index[acc])
    return out


# -- the bisection action of O(Ĝ) on O(G) ------------------------------------------

def phi(cd: CoverData, s: Bisection) -> Bisection:
    """Φ(s) = J1∘s∘J0⁻¹, a local bisection of G from one of Ĝ."""
    inv0 = {v: k for k, v in enumerate(cd.J0.fn)}
    vals = [-1] * cd.G.G0.n
    dom = 0
    for x in range(cd.G.G0.n):
        y = inv0.get(x)
        if y is not None and s.domain >> y & 1:
            vals[x] = cd.J1.fn[s.values[y]]
            dom |= 1 << x
    return Bisection(dom, tuple(vals))


def bisection_of(Gh: FinGroupoid, mask: int) -> Bisection:
    """The local section of d̂ whose image is the partial unit ``mask``."""
    vals = [-1] * Gh.G0.n
    dom = 0
    for g in bits(mask):
        x = Gh.d.fn[g]
        if dom >> x & 1:
            raise UsageError(f"{Gh.G1.set_label(mask)} is not a partial unit")
        vals[x] = g
        dom |= 1 << x
    return Bisection(dom, tuple(vals))


def _is_partial_unit(Gh: FinGroupoid, mask: int) -> bool:
    ds = [Gh.d.fn[g] for g in bits(mask)]
    rs = [Gh.r.fn[g] for g in bits(mask)]
    return len(set(ds)) == len(ds) and len(set(rs)) == len(rs) and Gh.G1.is_open(mask)


def translate(cd: CoverData, umask: int, qmask: int) -> int:
    """Point mask of Φ(u)·q = {Φ(u)(r a)·a : a ∈ q, r a ∈ dom Φ(u)}."""
    G = cd.G
    s = phi(cd, bisection_of(cd.Ghat, umask))
    out = 0
    for a in bits(qmask):
        x = G.r.fn[a]
        if s.domain >> x & 1:
            out |= 1 << G.mul(s.values[x], a)
    return out


def bisection_action(cd: CoverData, u: int, q: int) -> int:
    """u·q for a partial unit u of O(Ĝ) and q of O(G), both as frame element ids."""
    Lh, L = cd.Ghat.G1.frame, cd.G.G1.frame
    um = Lh.masks[u]
    if not _is_partial_unit(cd.Ghat, um):
        raise UsageError(f"{Lh.label(u)} is not a partial unit; use action_table for general elements")
    m = translate(cd, um, L.masks[q])
    if m not in L._mask_index:
        raise StructuralError(f"translate of {L.label(q)} along {Lh.label(u)} is not open")
    return L._mask_index[m]


def action_table(cd: CoverData) -> np.ndarray:
    """a·q for all a in O(Ĝ), extended from partial units by joins."""
    Gh = cd.Ghat
    Lh, L = Gh.G1.frame, cd.G.G1.frame
    units = [m for m in Lh.masks if _is_partial_unit(Gh, m)]

    def gen(am, qm):
        if _is_partial_unit(Gh, am):
            return translate(cd, am, qm)
        out = 0
        for u in units:
            if u & ~am == 0:
                out |= translate(cd, u, qm)
        return out

    return bilinear_table(Lh, L, L, gen, "bisection action")


# -- inverse-embedded quantal frames --------------------------------------------------

@dataclass(eq=False)
class IEQFData:
    """O embedded in Q̂ by j, with ``lact[a, x]`` = a·x and ``ract[x, a]`` = x·a."""

    O: Quantale
    Qhat: Quantale
    j: SupMap
    lact: np.ndarray
    ract: np.ndarray
    name: str = ""
    cover: CoverData | None = None

    def __post_init__(self):
        self.lact = np.asarray(self.lact, dtype=np.int64)
        self.ract = np.asarray(self.ract, dtype=np.int64)
        self._jstar = None
        self._derived = None

    @property
    def jt(self) -> np.ndarray:
        return np.asarray(self.j.table, dtype=np.int64)

    def jstar(self) -> MonotoneMap:
        if self._jstar is None:
            self._jstar = right_adjoint(self.j)
        return self._jstar

    def iota(self) -> np.ndarray:
        Q = self.Qhat
        return np.array([Q.lres(b, Q.unit) for b in range(Q.B.n)], dtype=np.int64)

    def derived(self) -> Quantale:
        """O with base actions ι(b)·x, support ς̂∘j and υ(x) = ι⁻¹(j(x)∧e)."""
        if self._derived is None:
            O, Q = self.O, self.Qhat
            io = self.iota()
            back = {int(v): b for b, v in enumerate(io)}
            jt = self.jt
            ups = []
            for x in range(O.n):
                v = int(Q.L.meet[jt[x], Q.unit])
                if v not in back:
                    raise StructuralError(f"j({O.label(x)})∧e is not below e")
                ups.append(back[v])
            based = BasedStructure(Q.B, self.lact[io, :], self.ract[:, io])
            self._derived = O.replace(based=based, spp=Q.spp[jt], upsilon=np.array(ups, dtype=np.int64),
                                      name=f"{O.name}[derived]")
        return self._derived


def ieqf_from_cover(cd: CoverData) -> IEQFData:
    O = oquantale(cd.G)
    Qhat = oquantale(cd.Ghat)
    j, _ = embedding_j(cd)
    lact = action_table(cd)
    ract = O.inv[lact[Qhat.inv][:, O.inv]].T
    return IEQFData(O, Qhat, j, lact, ract, name=cd.name, cover=cd)


def ieqf_identity(Q: Quantale) -> IEQFData:
    """Q embedded in itself, acting on itself by multiplication."""
    from .suplat import identity
    return IEQFData(Q, Q, identity(Q.L), Q.mult, Q.mult, name=f"identity on {Q.name}")


def _lab(L, *ids):
    return tuple(L.label(int(i)) for i in ids)


def check_bimodule(d: IEQFData) -> list[Check]:
    """Q̂-Q̂-bimodule laws, compatibility with the product of O, and j as a bimodule map."""
    O, Q, la, ra, jt = d.O, d.Qhat, d.lact, d.ract, d.jt
    QL, OL = Q.L, O.L
    if Q.unit is None:
        return [failed("bimodule.unit", (), "Q̂ has no unit")]
    out = []
    bad = np.flatnonzero(la[Q.unit] != np.arange(O.n))
    out.append(verdict("bimodule.left-unit", None if len(bad) == 0 else (O.label(bad[0]),)))
    bad = np.flatnonzero(ra[:, Q.unit] != np.arange(O.n))
    out.append(verdict("bimodule.right-unit", None if len(bad) == 0 else (O.label(bad[0]),)))
    lw = _bimorphism(QL, OL, OL, la)
    rw = _bimorphism(OL, QL, OL, ra)
    out.append(verdict("bimodule.left-joins", lw))
    out.append(verdict("bimodule.right-joins", rw))
    lin = lw is None and rw is None
    JQ, JO = np.array(QL.join_irreducibles()), np.array(OL.join_irreducibles())
    FQ, FO = np.arange(Q.n), np.arange(O.n)
    M, N, sQ, sO = Q.mult, O.mult, Q.inv, O.inv
    laws = [
        ("bimodule.left-assoc", lambda a, b, x: la[M[a, b], x] != la[a, la[b, x]], "QQO"),
        ("bimodule.right-assoc", lambda x, a, b: ra[x, M[a, b]] != ra[ra[x, a], b], "OQQ"),
        ("bimodule.compatible", lambda a, x, b: ra[la[a, x], b] != la[a, ra[x, b]], "QOQ"),
        ("bimodule.left-mult", lambda a, x, y: N[la[a, x], y] != la[a, N[x, y]], "QOO"),
        ("bimodule.middle-mult", lambda x, a, y: N[ra[x, a], y] != N[x, la[a, y]], "OQO"),
        ("bimodule.right-mult", lambda x, y, a: ra[N[x, y], a] != N[x, ra[y, a]], "OOQ"),
        ("bimodule.involution", lambda a, x: sO[la[a, x]] != ra[sO[x], sQ[a]], "QO"),
        ("bimodule.j-left", lambda a, x: jt[la[a, x]] != M[a, jt[x]], "QO"),
        ("bimodule.j-right", lambda x, a: jt[ra[x, a]] != M[jt[x], a], "OQ"),
    ]
    pick = {"Q": (JQ, FQ, Q.label), "O": (JO, FO, O.label)}
    for name, law, sig in laws:
        if name == "bimodule.involution" and sO is None:
            out.append(skipped(name, "O has no involution"))
            continue
        w = law_witness(law, [pick[c][0] for c in sig], [pick[c][1] for c in sig], [pick[c][2] for c in sig],
                        multilinear=lin)
        out.append(verdict(name, w))
    out.append(verdict("j.joins", join_witness(d.j)))
    out.append(verdict("j.meets", meet_witness(d.j)))
    dup = _first_collision(jt)
    out.append(verdict("j.injective", None if dup is None else _lab(OL, *dup)))
    return out


def _bimorphism(M, N, P, table) -> tuple | None:
    if rows_preserve_joins(N, P, table) and rows_preserve_joins(M, P, np.asarray(table).T):
        return None
    for x in range(M.n):
        row = table[x]
        if row[N.bottom] != P.bottom:
            return (M.label(x), N.label(N.bottom))
        hit = first_index(row[N.join] != P.join[row[:, None], row[None, :]])
        if hit is not None:
            return (M.label(x), N.label(hit[0]), N.label(hit[1]))
    for y in range(N.n):
        col = table[:, y]
        if col[M.bottom] != P.bottom:
            return (M.label(M.bottom), N.label(y))
        hit = first_index(col[M.join] != P.join[col[:, None], col[None, :]])
        if hit is not None:
            return (M.label(hit[0]), M.label(hit[1]), N.label(y))
    return None


def _first_collision(vals) -> tuple | None:
    seen = {}
    for a, v in enumerate(vals):
        if int(v) in seen:
            return (seen[int(v)], a)
        seen[int(v)] = a
    return None


def check_inverse_embedded(d: IEQFData, tensor_limit: int = 1 << 14) -> Outcome:
    """Items (a)–(e) of the definition, bimodule structure and the lemma suite."""
    O, Q, jt = d.O, d.Qhat, d.jt
    out = Outcome(d.name or f"{O.name}↪{Q.name}")
    if Q.unit is None or Q.inv is None or Q.spp is None:
        out.add(failed("ieqf.qhat", (Q.name,), "Q̂ must be an inverse quantal frame"))
        return out
    out.extend(check_bimodule(d))
    QL, OL = Q.L, O.L
    e, top = Q.unit, Q.one
    Od = d.derived()

    # (a) involution
    bad = np.flatnonzero(jt[O.inv] != Q.inv[jt])
    out.add(verdict("item.a", None if len(bad) == 0 else (O.label(bad[0]),)))

    # (b) j⊗id is injective on O⊗_B O
    B = Q.B
    src = TensorLattice([OL, OL], [BaseAction(B, Od.based.rres, Od.based.lres)], name="O⊗O")
    if d.j.is_surjective():
        out.add(passed("item.b", "j is an isomorphism, so j⊗id is"))
    else:
        tgt = TensorLattice([QL, OL], [BaseAction(B, Q.based.rres, Od.based.lres)], name="Q̂⊗O")
        from .suplat import identity
        f = map_tensor([d.j, identity(OL)], src, tgt)
        try:
            ok, wit = tensor_injective(f, tensor_limit)
            out.add(passed("item.b") if ok else failed("item.b", wit))
        except CapacityError as exc:
            out.add(skipped("item.b", str(exc)))

    # (c) μ̂*∘j = (j⊗j)∘μ*
    jj = map_tensor([d.j, d.j], Od.reduced_tensor(), Q.reduced_tensor())
    w = None
    for a in range(O.n):
        if Q.mu_star(int(jt[a])) != jj(Od.mu_star(a)):
            w = (O.label(a),)
            break
    out.add(verdict("item.c", w))

    # (d) (j(a)∧e)1 <= ⋁{j(x) : xx* <= a}
    xxs = O.mult[np.arange(O.n), O.inv]
    w, equal = None, True
    for a in range(O.n):
        lhs = int(Q.mult[QL.meet[jt[a], e], top])
        rhs = join_many(QL, jt[np.flatnonzero(OL.leq[xxs, a])])
        if not QL.leq[lhs, rhs] and w is None:
            w = (O.label(a), Q.label(lhs), Q.label(rhs))
        equal &= lhs == rhs
    out.add(verdict("item.d", w, "" if w else ("equality holds" if equal else "strict for some a")))
    out.data["item.d-equality"] = bool(equal)

    # (e) RS(Q̂) ⊆ j(O)
    img = set(int(v) for v in jt)
    missing = [a for a in right_sided(Q) if a not in img]
    out.add(verdict("item.e", None if not missing else (Q.label(missing[0]),)))

    out.extend(lemma_suite(d))
    return out


def lemma_suite(d: IEQFData) -> list[Check]:
    O, Q, jt, la = d.O, d.Qhat, d.jt, d.lact
    QL, OL = Q.L, O.L
    out = []
    jj = Q.mult[jt[:, None], jt[None, :]]  # j(x)j(y)
    hit = first_index(~QL.leq[jj, jt[O.mult]])
    out.append(verdict("lemma.lax", None if hit is None else _lab(OL, *hit)))
    hit = first_index(jj != jt[la[jt]])
    out.append(verdict("lemma.j-product", None if hit is None else _lab(OL, *hit)))

    x1 = O.mult[:, O.one]
    bad = np.flatnonzero(Q.mult[jt[x1], Q.one] != jt[x1])
    out.append(verdict("lemma.p1", None if len(bad) == 0 else (O.label(bad[0]),)))
    bad = np.flatnonzero(~QL.leq[Q.mult[jt, Q.one], jt[x1]])
    out.append(verdict("lemma.p2", None if len(bad) == 0 else (O.label(bad[0]),)))
    bad = np.flatnonzero(la[jt[x1], O.one] != x1)
    out.append(verdict("lemma.p3", None if len(bad) == 0 else (O.label(bad[0]),)))
    hit = first_index(~OL.leq[la[jt], O.mult])
    out.append(verdict("lemma.p4", None if hit is None else _lab(OL, *hit)))
    out.append(_lemma_p5(d))

    rsO = right_sided(O)
    rsQ = right_sided(Q)
    img = [int(jt[x]) for x in rsO]
    w = None
    if sorted(set(img)) != sorted(rsQ):
        extra = sorted(set(img) ^ set(rsQ))
        w = ("not onto RS(Q̂)", Q.label(extra[0]))
    else:
        for a, b in itertools.product(rsO, rsO):
            if OL.leq[a, b] != QL.leq[jt[a], jt[b]]:
                w = ("order", O.label(a), O.label(b))
                break
    out.append(verdict("lemma.rs-iso", w))

    Od = d.derived()
    sup = [c for c in check_supported(Od) + check_equivariant(Od)]
    bad = [c for c in sup if not c.passed]
    out.append(passed("lemma.support") if not bad else failed("lemma.support", (bad[0].name,) + tuple(bad[0].witness or ())))

    js = np.asarray(d.jstar().table, dtype=np.int64)
    units = partial_units(Q)
    w = None
    for s in units:
        bad = np.flatnonzero(la[s, js] != js[Q.mult[s]])
        if len(bad):
            w = (Q.label(s), Q.label(bad[0]))
            break
    out.append(verdict("lemma.jstar-equivariant", w))
    out.append(jstar_units(d))
    return out


def jstar_units(d: IEQFData) -> Check:
    """j_*(u) = ⊥ for partial units, under the hypothesis j_*(e) = ⊥ (O not unital)."""
    Q, O = d.Qhat, d.O
    js = d.jstar().table
    if js[Q.unit] != O.L.bottom:
        return skipped("lemma.jstar-units", f"hypothesis j_*(e) = ⊥ fails: j_*(e) = {O.label(js[Q.unit])}")
    bad = [u for u in partial_units(Q) if js[u] != O.L.bottom]
    return verdict("lemma.jstar-units", None if not bad else (Q.label(bad[0]),))


def jstar_units_unconditional(d: IEQFData) -> tuple | None:
    """First partial unit u with j_*(u) != ⊥, with no hypothesis."""
    Q, O = d.Qhat, d.O
    js = d.jstar().table
    for u in partial_units(Q):
        if js[u] != O.L.bottom:
            return (Q.label(u), O.label(js[u]))
    return None


def _lemma_p5(d: IEQFData) -> Check:
    """μ̂*(j(q)) = ⋁{u⊗u*v : u, v partial units, v <= j(q)}."""
    Q, O, jt = d.Qhat, d.O, d.jt
    T = Q.reduced_tensor()
    units = partial_units(Q)
    rects = {}
    for u in units:
        for v in units:
            rects[u, v] = T.rect([u, int(Q.mult[Q.inv[u], v])])
    for q in range(O.n):
        a = int(jt[q])
        acc = 0
        for v in units:
            if Q.L.leq[v, a]:
                for u in units:
                    acc |= rects[u, v]
        acc = T.closure(acc) if acc else T.bottom
        if acc != Q.mu_star(a):
            return failed("lemma.p5", (O.label(q),))
    return passed("lemma.p5")


def theorem_groupoid_quantale(d: IEQFData) -> Check:
    """O with the support and υ transported from Q̂ is a groupoid quantale."""
    c = classify(d.derived())
    if c.groupoid_quantale:
        return passed("theorem.groupoid-quantale")
    return incident("theorem.groupoid-quantale", (c.failing,), "derived structure is not a groupoid quantale")


def bullet_differs(d: IEQFData) -> tuple | None:
    """First (x, y) with j(x)j(y) != j(xy), or None when j(O) is closed under the Q̂ product."""
    jt = d.jt
    hit = first_index(d.Qhat.mult[jt[:, None], jt[None, :]] != jt[d.O.mult])
    return None if hit is None else _lab(d.O.L, *hit)


# -- étale-covered groupoids ---------------------------------------------------------

def check_etale_covered(G: FinGroupoid, cd: CoverData) -> Outcome:
    out = Outcome(cd.name or f"cover of {G.name}")
    if cd.G is not G:
        raise UsageError("cover data belongs to a different groupoid")
    Gh, J0, J1 = cd.Ghat, cd.J0, cd.J1
    rep = validate_groupoid(Gh)
    out.add(passed("cover.etale") if rep.etale else failed("cover.etale", (Gh.name,)))

    # (1) covering functor
    S0 = G.G0
    iso = J0.is_injective() and J0.is_surjective() and all(
        S0.leq[J0.fn[a], J0.fn[b]] == Gh.G0.leq[a, b] for a in range(Gh.G0.n) for b in range(Gh.G0.n))
    out.add(passed("cond1.J0-iso") if iso else failed("cond1.J0-iso", (J0.name,)))
    out.add(verdict("cond1.J1-continuous", continuity_witness(J1)))
    P1 = Gh.G1.points
    w = None
    for g in range(Gh.G1.n):
        if G.d.fn[J1.fn[g]] != J0.fn[Gh.d.fn[g]]:
            w = ("d", P1[g])
        elif G.r.fn[J1.fn[g]] != J0.fn[Gh.r.fn[g]]:
            w = ("r", P1[g])
        elif J1.fn[Gh.i.fn[g]] != G.i.fn[J1.fn[g]]:
            w = ("i", P1[g])
        if w:
            break
    if w is None:
        for x in range(Gh.G0.n):
            if J1.fn[Gh.u.fn[x]] != G.u.fn[J0.fn[x]]:
                w = ("u", Gh.G0.points[x])
                break
    if w is None:
        for k, (g, h) in enumerate(Gh.G2.coords):
            if J1.fn[Gh.m.fn[k]] != G.mul(J1.fn[g], J1.fn[h]):
                w = ("m", P1[g], P1[h])
                break
    out.add(verdict("cond1.functor", w))
    ew = epi_witness(J1)
    out.add(verdict("cond1.J1-epi", ew))
    if continuity_witness(J1) is None and Gh.G1.count_opens_bounded(4096) and G.G1.count_opens_bounded(4096):
        fw = frame_epi_witness(J1)
        if (fw is None) != (ew is None):
            out.add(incident("cond1.epi-agreement", fw or ew, "point and frame epi criteria disagree"))
    if not out.passed:
        out.add(skipped("cond2", "covering functor conditions fail"))
        out.add(skipped("cond3", "covering functor conditions fail"))
        return out

    # (2) j equivariance for the bisection action
    try:
        j, _ = embedding_j(cd)
    except CoverDefectError as exc:
        out.add(failed("cond1.j-injective", exc.witness))
        return out
    jt = np.asarray(j.table, dtype=np.int64)
    Qh = oquantale(Gh)
    la = action_table(cd)
    w = None
    for u in partial_units(Qh):
        bad = np.flatnonzero(jt[la[u]] != Qh.mult[u, jt])
        if len(bad):
            w = (Qh.label(u), G.G1.frame.label(bad[0]))
            break
    out.add(verdict("cond2", w))

    # (3) J1×id between the spatial pullbacks is epi
    P, p1, p2 = pullback(Gh.d.then(J0), G.r, name="Ĝ1×G1")
    f = pair_map(P, [p1.then(J1), p2], G.G2)
    cw = continuity_witness(f)
    if cw is not None:
        out.add(failed("cond3", ("not continuous",) + cw))
    else:
        ew = epi_witness(f)
        out.add(verdict("cond3", ew))
        if P.count_opens_bounded(4096) and G.G2.count_opens_bounded(4096):
            fw = frame_epi_witness(f)
            if (fw is None) != (ew is None):
                out.add(incident("cond3.epi-agreement", fw or ew, "point and frame epi criteria disagree"))

    out.add(phi_homomorphism(cd))
    if cd.kind == "germ":
        jb = j_by_bisections(cd)
        bad = [q for q in range(len(jb)) if jb[q] != jt[q]]
        out.add(passed("cover.j-formula") if not bad else
                incident("cover.j-formula", (G.G1.frame.label(bad[0]),), "preimage and bisection formula disagree"))
    return out


def phi_homomorphism(cd: CoverData) -> Check:
    """Φ(û) = u and Φ(s∘t) = Φ(s)∘Φ(t) over all bisections of Ĝ."""
    G, Gh = cd.G, cd.Ghat
    if phi(cd, unit_bisection(Gh)) != unit_bisection(G):
        return failed("phi.unit", ())
    bis = bisections(Gh)
    images = [phi(cd, s) for s in bis]
    for s, ps in zip(bis, images):
        if bisection_witness(G, ps.domain, ps.values) is not None:
            return failed("phi.bisection", (str(s.describe(Gh)),))
    for s, ps in zip(bis, images):
        for t, pt in zip(bis, images):
            if phi(cd, compose_bisections(Gh, s, t)) != compose_bisections(G, ps, pt):
                return failed("phi.homomorphism", (str(s.describe(Gh)), str(t.describe(Gh))))
    return passed("phi.homomorphism")


def check_cover(cd: CoverData) -> Outcome:
    """check_etale_covered plus the derived inverse-embedded quantal frame."""
    out = check_etale_covered(cd.G, cd)
    if out.passed:
        d = ieqf_from_cover(cd)
        sub = check_inverse_embedded(d)
        out.extend(sub, prefix="ieqf")
        out.add(theorem_groupoid_quantale(d))
        out.data["bullet-differs"] = bullet_differs(d)
    return out
