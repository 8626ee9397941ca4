"""Hilbert modules over inverse quantal frames, sheaves and the O-sheaf condition.

Supports are stored as elements of Q below the unit e (the base locale seen
as ↓e).  For a sheaf built from a spatial action the inner product is the
spatial one, ⟨x, y⟩ = {g : g·ξ ∈ x for some ξ ∈ y}, and the quantale-side
formula ⋁_u u·ς(u*x ∧ y) is compared against it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .actions import GAction, check_descent, make_action, module_of, validate_action
from .checks import Check, Outcome, failed, first_index, incident, passed, skipped, verdict
from .cover import CoverData, IEQFData
from .errors import UsageError
from .groupoid import FinGroupoid, oquantale, validate_groupoid
from .locale import FinSpace, bits, local_homeo_witness
from .quantale import Quantale, check_equivariant as q_equivariant, join_many, partial_units, stability_checks
from .suplat import LatticeMap, SupLattice, rows_preserve_joins

PACKAGES = ("pre-hilbert", "hilbert", "complete", "supported", "stable")
BASIS_SEARCH_SIZE = 4
BASIS_SEARCH_CARRIER = 16


@dataclass(eq=False)
class HilbertModule:
    """``act[a, x]`` = a·x; ``ip[x, y]`` = ⟨x, y⟩ in Q; ``spp[x]`` in ↓e."""

    Q: Quantale
    X: SupLattice
    act: np.ndarray
    ip: np.ndarray | None = None
    basis: tuple | None = None
    spp: np.ndarray | None = None
    name: str = ""
    action: GAction | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.act = np.asarray(self.act, dtype=np.int64)
        if self.ip is not None:
            self.ip = np.asarray(self.ip, dtype=np.int64)
        if self.spp is not None:
            self.spp = np.asarray(self.spp, dtype=np.int64)

    def replace(self, **kw) -> "HilbertModule":
        data = dict(Q=self.Q, X=self.X, act=self.act, ip=self.ip, basis=self.basis, spp=self.spp, name=self.name,
                    action=self.action, notes=dict(self.notes))
        data.update(kw)
        return HilbertModule(**data)


def _iota(Q: Quantale) -> np.ndarray:
    return np.array([Q.lres(b, Q.unit) for b in range(Q.B.n)], dtype=np.int64)


# -- builders ------------------------------------------------------------------------

def self_module(Q: Quantale) -> HilbertModule:
    """Q acting on itself with ⟨a, b⟩ = ab* and support ι∘ς."""
    if Q.inv is None or Q.unit is None:
        raise UsageError("the self-module needs an involution and a unit")
    idx = np.arange(Q.n)
    ip = Q.mult[idx[:, None], Q.inv[None, :]]
    spp = _iota(Q)[Q.spp] if Q.spp is not None else None
    return HilbertModule(Q, Q.L, Q.mult, ip, None, spp, name=f"{Q.name} on itself")


def zero_module(Q: Quantale) -> HilbertModule:
    L = SupLattice(["0"], np.ones((1, 1), bool), name="0")
    z = np.zeros((Q.n, 1), dtype=np.int64)
    return HilbertModule(Q, L, z, np.full((1, 1), Q.L.bottom), (), np.array([Q.L.bottom]), name="zero")


def spatial_ip(a: GAction, Q: Quantale | None = None) -> np.ndarray:
    """⟨x, y⟩ = {g : g·ξ ∈ x for some ξ ∈ y} as open-set ids of G1."""
    G = a.G
    LX = a.X.frame
    LG = G.G1.frame
    out = np.empty((LX.n, LX.n), dtype=np.int64)
    pairs = [(g, xi, a.act.fn[k]) for k, (g, xi) in enumerate(a.GX.coords)]
    for i, xm in enumerate(LX.masks):
        for j, ym in enumerate(LX.masks):
            m = 0
            for g, xi, v in pairs:
                if ym >> xi & 1 and xm >> v & 1:
                    m |= 1 << g
            if m not in LG._mask_index:
                raise UsageError(f"inner product ⟨{LX.label(i)},{LX.label(j)}⟩ is not open")
            out[i, j] = LG._mask_index[m]
    return out


def sheaf_of(a: GAction) -> HilbertModule:
    """The Hilbert O(G)-module of a sheaf over an étale groupoid; anchor must be a local homeomorphism."""
    G = a.G
    if not validate_groupoid(G).etale:
        raise UsageError(f"{G.name} is not étale")
    w = local_homeo_witness(a.p)
    if w is not None:
        raise UsageError(f"anchor of {a.name} is not a local homeomorphism: {w}")
    Q = oquantale(G)
    m = module_of(a, Q)
    B = G.G0.frame
    io = _iota(Q)
    spp = np.array([io[B._mask_index[a.p.image(v)]] for v in m.X.masks], dtype=np.int64)
    return HilbertModule(Q, m.X, m.table, spatial_ip(a, Q), None, spp, name=f"sheaf {a.name}", action=a)


# -- validation ------------------------------------------------------------------------

def hilbert_sections(h: HilbertModule) -> tuple[list[int], list[int] | None]:
    """(Hilbert sections, local sections); local sections need a support."""
    X, Q, act, ip = h.X, h.Q, h.act, h.ip
    hs = []
    for s in range(X.n):
        vals = act[ip[:, s], s]  # ⟨x,s⟩s for each x
        if X.leq[vals, np.arange(X.n)].all():
            hs.append(s)
    if h.spp is None:
        return hs, None
    ls = []
    for s in range(X.n):
        below = np.flatnonzero(X.leq[:, s])
        if (act[h.spp[below], s] == below).all():
            ls.append(s)
    return hs, ls


def is_basis(h: HilbertModule, gamma) -> tuple | None:
    """First x with x != ⋁_{t∈Γ} ⟨x,t⟩t, or None."""
    X = h.X
    gamma = list(gamma)
    for x in range(X.n):
        vals = [int(h.act[h.ip[x, t], t]) for t in gamma]
        if join_many(X, np.array(vals, dtype=np.int64)) != x:
            return (X.label(x),)
    return None


def find_basis(h: HilbertModule, max_size: int = BASIS_SEARCH_SIZE) -> tuple | None:
    """A smallest Hilbert basis of at most ``max_size`` sections, when the carrier is small."""
    if h.X.n > BASIS_SEARCH_CARRIER:
        return None
    hs, _ = hilbert_sections(h)
    for k in range(0, max_size + 1):
        for gamma in itertools.combinations(hs, k):
            if is_basis(h, gamma) is None:
                return gamma
    return None


def validate_hilbert(h: HilbertModule, packages=PACKAGES) -> Outcome:
    packages = list(packages)
    bad = [p for p in packages if p not in PACKAGES]
    if bad:
        raise UsageError(f"unknown Hilbert package {bad[0]!r}")
    Q, X, act, ip = h.Q, h.X, h.act, h.ip
    out = Outcome(h.name)
    if ip is None:
        raise UsageError("Hilbert packages need an inner product")
    lab = X.label
    # module laws
    w = None
    for a in range(Q.n):
        hit = first_index(act[Q.mult[a]] != act[a][act])
        if hit is not None:
            w = (Q.label(a), Q.label(hit[0]), lab(hit[1]))
            break
    out.add(verdict("module.associative", w))
    if Q.unit is not None:
        bad_x = np.flatnonzero(act[Q.unit] != np.arange(X.n))
        out.add(verdict("module.unit", None if len(bad_x) == 0 else (lab(bad_x[0]),)))
    ok = rows_preserve_joins(X, X, act) and rows_preserve_joins(Q.L, X, act.T)
    out.add(passed("module.joins") if ok else failed("module.joins", _join_fail(Q.L, X, act)))
    if "pre-hilbert" in packages or "hilbert" in packages:
        w = None
        for a in range(Q.n):
            hit = first_index(ip[act[a]] != Q.mult[a][ip])
            if hit is not None:
                w = (Q.label(a), lab(hit[0]), lab(hit[1]))
                break
        out.add(verdict("pre-hilbert.linear", w))
        ok = rows_preserve_joins(X, Q.L, ip.T)
        out.add(passed("pre-hilbert.joins") if ok else failed("pre-hilbert.joins", _join_fail(X, Q.L, ip.T, swap=True)))
        hit = first_index(ip != Q.inv[ip.T])
        out.add(verdict("pre-hilbert.symmetric", None if hit is None else (lab(hit[0]), lab(hit[1]))))
    if "hilbert" in packages:
        seen = {}
        w = None
        for x in range(X.n):
            key = ip[x].tobytes()
            if key in seen:
                w = (lab(seen[key]), lab(x))
                break
            seen[key] = x
        out.add(verdict("hilbert.non-degenerate", w))
    if "complete" in packages:
        if h.basis is not None:
            out.add(verdict("complete.basis", is_basis(h, h.basis)))
        else:
            hs, _ = hilbert_sections(h)
            w = is_basis(h, hs)
            out.add(verdict("complete.sections-basis", w))
            if w is None:
                out.data["basis"] = find_basis(h)
    if "supported" in packages or "stable" in packages:
        if h.spp is None:
            raise UsageError("support packages need ς_X")
        out.extend(_support_checks(h, "stable" in packages))
    return out


def _join_fail(L, P, table, swap=False):
    for x in range(table.shape[0]):
        row = table[x]
        if row[L.bottom] != P.bottom:
            return (x, L.label(L.bottom))
        hit = first_index(row[L.join] != P.join[row[:, None], row[None, :]])
        if hit is not None:
            return (x, L.label(hit[0]), L.label(hit[1]))
    return ()


def _support_checks(h: HilbertModule, stable: bool) -> list[Check]:
    Q, X, act, ip, sp = h.Q, h.X, h.act, h.ip, h.spp
    e, L, lab = Q.unit, Q.L, X.label
    out = []
    bad = np.flatnonzero(~L.leq[sp, e])
    out.append(verdict("supported.below-e", None if len(bad) == 0 else (lab(bad[0]),)))
    hit = first_index(X.leq & ~L.leq[sp[:, None], sp[None, :]])
    out.append(verdict("supported.monotone", None if hit is None else (lab(hit[0]), lab(hit[1]))))
    diag = ip[np.arange(X.n), np.arange(X.n)]
    bad = np.flatnonzero(~L.leq[sp, diag])
    out.append(verdict("supported.below-ip", None if len(bad) == 0 else (lab(bad[0]),)))
    bad = np.flatnonzero(~X.leq[np.arange(X.n), act[sp, np.arange(X.n)]])
    out.append(verdict("supported.covers", None if len(bad) == 0 else (lab(bad[0]),)))
    if not stable:
        return out
    io = _iota(Q)
    down = io  # the elements b <= e, indexed by the base locale
    bx = act[down]  # [b, x] = b·x
    s1 = first_index(sp[bx] != L.meet[down[:, None], sp[None, :]])
    s2 = first_index(sp[bx] != io[Q.spp[Q.mult[down[:, None], sp[None, :]]]])
    s3 = first_index(~L.leq[sp[bx], io[Q.spp[down]][:, None]])
    checks = []
    for name, hit in (("stable.meet", s1), ("stable.support", s2), ("stable.bound", s3)):
        checks.append(verdict(name, None if hit is None else (Q.B.label(hit[0]), lab(hit[1]))))
    out += checks
    q_stable = all(c.passed for c in stability_checks(Q))
    if q_stable and len({c.passed for c in checks}) > 1:
        out.append(incident("stable.agreement", None, "stability conditions disagree over a stably supported quantale"))
    if q_stable and all(c.passed for c in out):
        out += _derived_identities(h)
    return out


def _derived_identities(h: HilbertModule) -> list[Check]:
    """Consequences of stable support; a failure here contradicts the theory, so it is an incident."""
    Q, X, ip, sp = h.Q, h.X, h.ip, h.spp
    L, e, lab = Q.L, Q.unit, X.label
    io = _iota(Q)
    sQ = io[Q.spp]  # ς_Q as an element below e
    top = X.top
    idx = np.arange(X.n)
    out = []
    hit = first_index(~L.leq[sQ[ip], sp[:, None]])
    w = None if hit is None else (lab(hit[0]), lab(hit[1]))
    if w is None:
        bad = np.flatnonzero((sp != sQ[ip[idx, idx]]) | (sp != sQ[ip[:, top]]))
        w = None if len(bad) == 0 else (lab(bad[0]),)
    out.append(passed("derived.support") if w is None else incident("derived.support", w))
    hit = first_index(Q.mult[sp][:, np.arange(Q.n)] != L.meet[ip[:, top]][:, np.arange(Q.n)])
    out.append(passed("derived.restrict") if hit is None else
               incident("derived.restrict", (lab(hit[0]), Q.label(hit[1]))))
    bad = np.flatnonzero((sp != L.meet[ip[:, top], e]) | (sp != L.meet[ip[idx, idx], e]))
    out.append(passed("derived.meet-e") if len(bad) == 0 else incident("derived.meet-e", (lab(bad[0]),)))
    return out


# -- formulas and sections ------------------------------------------------------------

def inner_product_formula(h: HilbertModule) -> np.ndarray:
    """⟨x, y⟩ = ⋁_{u ∈ I(Q)} u·ς(u*x ∧ y)."""
    if h.spp is None:
        raise UsageError("the inner product formula needs a support")
    if h.action is not None and local_homeo_witness(h.action.p) is not None:
        raise UsageError("the inner product formula needs an étale anchor")
    Q, X, act, sp = h.Q, h.X, h.act, h.spp
    units = np.array(partial_units(Q), dtype=np.int64)
    out = np.empty((X.n, X.n), dtype=np.int64)
    ustar = Q.inv[units]
    for x in range(X.n):
        ux = act[ustar, x]  # u*x for each u
        meets = X.meet[ux]  # [u, y]
        vals = Q.mult[units[:, None], sp[meets]]  # [u, y]
        for y in range(X.n):
            out[x, y] = join_many(Q.L, vals[:, y])
    return out


def check_sheaf(h: HilbertModule) -> Outcome:
    """Formula inner product equals the stored one; Hilbert sections equal local sections."""
    out = Outcome(h.name)
    f = inner_product_formula(h)
    hit = first_index(f != h.ip)
    out.add(passed("sheaf.ip-formula") if hit is None else
            incident("sheaf.ip-formula", (h.X.label(hit[0]), h.X.label(hit[1]))))
    hs, ls = hilbert_sections(h)
    out.add(passed("sheaf.sections") if hs == ls else
            incident("sheaf.sections", (h.X.label(min(set(hs) ^ set(ls))),)))
    out.data["sections"] = [h.X.label(s) for s in hs]
    return out


# -- O-sheaves -------------------------------------------------------------------------

def check_O_sheaf(h: HilbertModule, ieq: IEQFData) -> Outcome:
    """Every inner product value lies in j(O)."""
    out = Outcome(f"O-sheaf {h.name}")
    img = np.zeros(ieq.Qhat.n, dtype=bool)
    img[ieq.jt] = True
    hit = first_index(~img[h.ip])
    w = None if hit is None else (h.X.label(hit[0]), h.X.label(hit[1]), ieq.Qhat.label(h.ip[hit]))
    out.add(verdict("O-sheaf.values", w))
    return out


def thm_descent_iff_inner(a: GAction, ieq: IEQFData, cd: CoverData) -> Outcome:
    """Descent of a Ĝ-sheaf and the O-sheaf condition, computed independently, must agree."""
    out = Outcome(f"descent-iff-inner {a.name}")
    dr = check_descent(a, cd)
    h = sheaf_of(a)
    osh = check_O_sheaf(h, ieq)
    out.data["descent"] = dr.ok
    out.data["O-sheaf"] = osh.passed
    out.extend(dr.checks)
    if dr.ok == osh.passed:
        out.add(passed("descent-iff-inner", f"both {'positive' if dr.ok else 'negative'}"))
    else:
        out.add(incident("descent-iff-inner", (dr.witness, osh.first_failure() and osh.first_failure().witness),
                         "descent and inner-product verdicts differ"))
        out.data["state"] = {"points": a.X.points, "act": a.act.as_dict(), "anchor": a.p.as_dict()}
    return out


def group_sheaves(G: FinGroupoid, max_points: int = 3) -> list[GAction]:
    """Every action of a discrete one-object group on a discrete space of at most ``max_points`` points."""
    if G.G0.n != 1 or not G.G1.is_discrete:
        raise UsageError("group_sheaves enumerates actions of discrete groups only")
    out = []
    for n in range(1, max_points + 1):
        X = FinSpace.discrete([f"x{i}" for i in range(n)], name=f"D{n}")
        perms = list(itertools.permutations(range(n)))
        for choice in itertools.product(perms, repeat=G.G1.n):
            a = make_action(G, X, [0] * n, lambda g, x: choice[g][x], name=f"D{n}:{choice}")
            if validate_action(a).passed:
                out.append(a)
    return out


def check_sheaf_correspondence(cd: CoverData, ieq: IEQFData, max_points: int = 3) -> Outcome:
    """Over small discrete carriers, O-sheaves are exactly the Ĝ-sheaves that descend."""
    out = Outcome(f"sheaf correspondence {cd.G.name}")
    count = [0, 0]
    w = None
    for a in group_sheaves(cd.Ghat, max_points):
        dr = check_descent(a, cd).ok
        osh = check_O_sheaf(sheaf_of(a), ieq).passed
        count[0] += dr
        count[1] += osh
        if dr != osh and w is None:
            w = (a.name,)
    out.add(passed("sheaf-correspondence") if w is None else incident("sheaf-correspondence", w))
    out.data["descended"], out.data["O-sheaves"] = count
    return out


# -- homomorphisms and adjointness -------------------------------------------------------

def direct_image(f, hx: HilbertModule, hy: HilbertModule) -> LatticeMap:
    """The direct image of a point map between the carriers of two spatial sheaves."""
    X, Y = hx.X, hy.X
    return LatticeMap(X, Y, [Y._mask_index[f.image(m)] for m in X.masks], name=f"{f.name}_!")


def check_sheaf_hom(f: LatticeMap, hx: HilbertModule, hy: HilbertModule) -> Outcome:
    out = Outcome(f"sheaf-hom {f.name}")
    t = np.asarray(f.table, dtype=np.int64)
    bad = np.flatnonzero(hy.spp[t] != hx.spp)
    out.add(verdict("sheaf-hom.support", None if len(bad) == 0 else (hx.X.label(bad[0]),)))
    _, lx = hilbert_sections(hx)
    _, ly = hilbert_sections(hy)
    ly = set(ly)
    bad = [s for s in lx if int(t[s]) not in ly]
    out.add(verdict("sheaf-hom.sections", None if not bad else (hx.X.label(bad[0]),)))
    hit = first_index(t[hx.act] != hy.act[:, t])
    w = None if hit is None else (hx.Q.label(hit[0]), hx.X.label(hit[1]))
    if w is None and not rows_preserve_joins(hx.X, hy.X, t):
        w = ("joins",)
    out.add(verdict("sheaf-hom.module", w))
    return out


def check_adjointness(lact: np.ndarray, h: HilbertModule, ieq: IEQFData) -> Outcome:
    """⟨j(a)x, y⟩ = ⟨x, j(a*)y⟩ for a in O, with ``lact[c, x]`` the Q̂-action on the carrier."""
    out = Outcome(f"adjointness {h.name}")
    O, jt, ip = ieq.O, ieq.jt, h.ip
    w = None
    for a in range(O.n):
        lhs = ip[lact[jt[a]]]  # [x, y]
        rhs = ip[:, lact[jt[O.inv[a]]]]
        hit = first_index(lhs != rhs)
        if hit is not None:
            w = (O.label(a), h.X.label(hit[0]), h.X.label(hit[1]))
            break
    out.add(verdict("adjointness", w))
    return out
