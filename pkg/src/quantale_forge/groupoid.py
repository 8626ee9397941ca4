"""Finite topological groupoids and their quantales O(G).

Convention: m(g, h) is defined when d(g) = r(h) ("g after h"), so for a pair
arrow (x, y) we have r = x, d = y and (x, y)(y, z) = (x, z).  Left restriction
U◁A cuts A along r, right restriction A▷U along d, and the support of A is its
r-image.  The opposite convention is available through :func:`opposite`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .checks import Outcome, failed, incident, passed, verdict
from .errors import StructuralError, UsageError
from .locale import CMap, FinSpace, bits, classify_map, identity_map, pullback, sierpinski, point
from .quantale import BasedStructure, Quantale
from .suplat import SupLattice


class FinGroupoid:
    def __init__(self, G0: FinSpace, G1: FinSpace, d: Sequence[int], r: Sequence[int],
                 mult: Callable[[int, int], int] | dict, inv: Sequence[int], unit: Sequence[int], name: str = ""):
        self.name = name
        self.G0, self.G1 = G0, G1
        self.d = CMap(G1, G0, d, name="d")
        self.r = CMap(G1, G0, r, name="r")
        self.i = CMap(G1, G1, inv, name="i")
        self.u = CMap(G0, G1, unit, name="u")
        self.G2, self.p1, self.p2 = pullback(self.d, self.r, name=f"{name}_2")
        table = []
        for g, h in self.G2.coords:
            v = mult[(g, h)] if isinstance(mult, dict) else mult(g, h)
            if v is None:
                raise StructuralError(f"groupoid {name}: product of composable {G1.points[g]}, {G1.points[h]} undefined")
            table.append(int(v))
        self.m = CMap(self.G2, G1, table, name="m")
        self._quantale = {}
        self._report = None

    def __repr__(self):
        return f"FinGroupoid({self.name}, {self.G0.n} objects, {self.G1.n} arrows)"

    def arrow(self, label: str) -> int:
        return self.G1[label]

    def mul(self, g: int, h: int) -> int | None:
        k = self.G2.coord_index.get((g, h))
        return None if k is None else self.m.fn[k]

    def composable(self, g: int, h: int) -> bool:
        return self.d.fn[g] == self.r.fn[h]

    def product_set(self, A: int, B: int) -> int:
        out = 0
        for k, (g, h) in enumerate(self.G2.coords):
            if A >> g & 1 and B >> h & 1:
                out |= 1 << self.m.fn[k]
        return out

    def quantale(self, convention: str = "r") -> Quantale:
        return oquantale(self, convention)


def opposite(G: FinGroupoid) -> FinGroupoid:
    """Same arrows with d and r exchanged and multiplication reversed."""
    return FinGroupoid(G.G0, G.G1, G.r.fn, G.d.fn, lambda g, h: G.mul(h, g), G.i.fn, G.u.fn, name=f"{G.name}^op")


# -- validation ---------------------------------------------------------------

def algebra_witness(G: FinGroupoid) -> tuple | None:
    P = G.G1.points
    for x in range(G.G0.n):
        if G.d.fn[G.u.fn[x]] != x or G.r.fn[G.u.fn[x]] != x:
            return ("unit-anchor", G.G0.points[x])
    for k, (g, h) in enumerate(G.G2.coords):
        gh = G.m.fn[k]
        if G.d.fn[gh] != G.d.fn[h] or G.r.fn[gh] != G.r.fn[g]:
            return ("product-anchor", P[g], P[h])
    for g in range(G.G1.n):
        if G.mul(G.u.fn[G.r.fn[g]], g) != g or G.mul(g, G.u.fn[G.d.fn[g]]) != g:
            return ("unit-law", P[g])
        ig = G.i.fn[g]
        if G.d.fn[ig] != G.r.fn[g] or G.r.fn[ig] != G.d.fn[g]:
            return ("inverse-anchor", P[g])
        if G.mul(g, ig) != G.u.fn[G.r.fn[g]] or G.mul(ig, g) != G.u.fn[G.d.fn[g]]:
            return ("inverse-law", P[g])
    for g, h in G.G2.coords:
        gh = G.mul(g, h)
        for k in range(G.G1.n):
            if G.d.fn[h] == G.r.fn[k]:
                if G.mul(gh, k) != G.mul(g, G.mul(h, k)):
                    return ("associative", P[g], P[h], P[k])
    return None


@dataclass
class GroupoidReport:
    outcome: Outcome
    valid: bool
    open: bool
    etale: bool

    def flags(self) -> dict:
        return {"valid": self.valid, "open": self.open, "etale": self.etale}


def validate_groupoid(G: FinGroupoid) -> GroupoidReport:
    if getattr(G, "_report", None) is None:
        G._report = _validate_groupoid(G)
    return G._report


def _validate_groupoid(G: FinGroupoid) -> GroupoidReport:
    out = Outcome(G.name)
    out.add(verdict("groupoid.algebra", algebra_witness(G)))
    classes = {}
    for nm, f in (("d", G.d), ("r", G.r), ("m", G.m), ("i", G.i), ("u", G.u)):
        c = classify_map(f)
        classes[nm] = c
        out.add(c.continuous if c.continuous.passed else failed(f"groupoid.continuous.{nm}", c.continuous.witness))
        for x in c.crosschecks:
            if x.status == "incident":
                out.add(x)
    ii = G.i.then(G.i)
    out.add(verdict("groupoid.i-involution", None if ii.fn == tuple(range(G.G1.n)) else
                    (G.G1.points[next(k for k, v in enumerate(ii.fn) if v != k)],)))
    valid = out.passed
    is_open = valid and classes["d"].open.passed
    if is_open:
        out.add(passed("groupoid.open"))
        for nm in ("r", "m"):
            c = classes[nm].open
            out.add(passed(f"groupoid.open.{nm}") if c.passed else incident(f"groupoid.open.{nm}", c.witness,
                                                                          "d is open but this map is not"))
    else:
        out.add(failed("groupoid.open", classes["d"].open.witness) if valid else
                failed("groupoid.open", None, "invalid groupoid"))
    etale = is_open and classes["d"].local_homeo.passed
    out.data["flags"] = {"valid": valid, "open": is_open, "etale": etale}
    out.data["d"] = classes["d"]
    return GroupoidReport(out, valid, is_open, etale)


# -- the quantale O(G) -----------------------------------------------------------

def _lookup(L: SupLattice, masks, what: str) -> np.ndarray:
    idx = L._mask_index
    flat = [idx.get(int(m), -1) for m in np.asarray(masks).reshape(-1)]
    arr = np.array(flat, dtype=np.int64).reshape(np.shape(masks))
    if (arr < 0).any():
        raise StructuralError(f"{what} produced a non-open set")
    return arr


def bilinear_table(L1: SupLattice, L2: SupLattice, out: SupLattice, gen: Callable[[int, int], int],
                   what: str = "operation") -> np.ndarray:
    """Table of a map of open-set frames that preserves joins in each variable.

    ``gen(A, B)`` is evaluated on point masks of join-irreducible opens only;
    every other entry is the union of generator values below it.
    """
    J1, J2 = L1.join_irreducibles(), L2.join_irreducibles()
    big = max((m.bit_length() for m in out.masks), default=0) > 62
    dtype = object if big else np.int64
    P = np.array([[gen(L1.masks[a], L2.masks[b]) for b in J2] for a in J1], dtype=dtype).reshape(len(J1), len(J2))
    below1 = np.array([[bool(L1.leq[j, x]) for j in J1] for x in range(L1.n)], dtype=bool).reshape(L1.n, len(J1))
    below2 = np.array([[bool(L2.leq[j, y]) for j in J2] for y in range(L2.n)], dtype=bool).reshape(L2.n, len(J2))
    table = np.empty((L1.n, L2.n), dtype=np.int64)
    for x in range(L1.n):
        Rx = np.zeros(len(J2), dtype=dtype)
        for a in np.flatnonzero(below1[x]):
            Rx = Rx | P[a]
        vals = np.where(below2, Rx[None, :], 0).astype(dtype)
        row = np.bitwise_or.reduce(vals, axis=1) if len(J2) else np.zeros(L2.n, dtype=dtype)
        table[x] = _lookup(out, row, what)
    return table


def oquantale(G: FinGroupoid, convention: str = "r", check_open: bool = True) -> Quantale:
    """O(G) with its based, supported and reflexive structure."""
    if convention not in ("r", "d"):
        raise UsageError(f"unknown convention {convention!r}")
    if convention in G._quantale:
        return G._quantale[convention]
    if convention == "d":
        Q = oquantale(opposite(G), "r", check_open)
        Q.name = f"O({G.name})^d"
        G._quantale["d"] = Q
        return Q
    if check_open:
        rep = validate_groupoid(G)
        if not rep.open:
            raise UsageError(f"groupoid {G.name} is not open: {rep.outcome.first_failure()}")
    L = G.G1.frame
    B = G.G0.frame
    mult = bilinear_table(L, L, L, G.product_set, "multiplication")
    inv = _lookup(L, [G.i.image(m) for m in L.masks], "involution")
    lres = np.array([[L._mask_index[m & G.r.preimage(U)] for m in L.masks] for U in B.masks], dtype=np.int64)
    rres = np.array([[L._mask_index[m & G.d.preimage(U)] for U in B.masks] for m in L.masks], dtype=np.int64)
    spp = _lookup(B, [G.r.image(m) for m in L.masks], "support (r-image)")
    ups = _lookup(B, [G.u.preimage(m) for m in L.masks], "unit preimage")
    e_mask = G.u.image(G.G0.full)
    unit = L._mask_index.get(e_mask)
    Q = Quantale(L, mult, inv=inv, unit=unit, based=BasedStructure(B, lres, rres), spp=spp, upsilon=ups,
                 name=f"O({G.name})")
    Q.notes["groupoid"] = G.name
    if unit is None:
        Q.notes["unit"] = f"u(G0) = {G.G1.set_label(e_mask)} is not open"
    G._quantale[convention] = Q
    return Q


# -- builders ---------------------------------------------------------------------

def pair_groupoid(n: int, name: str = "") -> FinGroupoid:
    objs = [str(k) for k in range(n)]
    G0 = FinSpace.discrete(objs, name="disc" + str(n))
    arrows = [(x, y) for x in range(n) for y in range(n)]
    G1 = FinSpace.discrete([f"({x},{y})" for x, y in arrows], name=f"pair{n}_1")
    idx = {a: k for k, a in enumerate(arrows)}
    return FinGroupoid(G0, G1, [y for _, y in arrows], [x for x, _ in arrows],
                       lambda g, h: idx[(arrows[g][0], arrows[h][1])],
                       [idx[(y, x)] for x, y in arrows], [idx[(x, x)] for x in range(n)], name=name or f"pair{n}")


def pair_space_groupoid(S: FinSpace, name: str = "") -> FinGroupoid:
    """Pair groupoid S×S with the product topology."""
    arrows = [(x, y) for x in range(S.n) for y in range(S.n)]
    G1, _, _ = _product_named(S, arrows)
    idx = {a: k for k, a in enumerate(arrows)}
    return FinGroupoid(S, G1, [y for _, y in arrows], [x for x, _ in arrows],
                       lambda g, h: idx[(arrows[g][0], arrows[h][1])],
                       [idx[(y, x)] for x, y in arrows], [idx[(x, x)] for x in range(S.n)], name=name or f"pair_{S.name}")


def _product_named(S: FinSpace, arrows):
    leq = np.array([[S.leq[a[0], b[0]] and S.leq[a[1], b[1]] for b in arrows] for a in arrows], dtype=bool)
    return FinSpace([f"({S.points[x]},{S.points[y]})" for x, y in arrows], leq, name=f"{S.name}×{S.name}"), None, None


def group_labels(n: int) -> list[str]:
    return ["e"] + ["g" if k == 1 else f"g{k}" for k in range(1, n)]


def cyclic_group(n: int, indiscrete: bool = False, name: str = "") -> FinGroupoid:
    """Z/n over one object, with discrete or indiscrete arrow space."""
    labels = group_labels(n)
    G0 = point()
    G1 = (FinSpace.indiscrete if indiscrete else FinSpace.discrete)(labels, name=("ind" if indiscrete else "") + f"Z{n}")
    return FinGroupoid(G0, G1, [0] * n, [0] * n, lambda g, h: (g + h) % n, [(-g) % n for g in range(n)], [0],
                       name=name or (f"ind_z{n}" if indiscrete else f"z{n}"))


def unit_groupoid(S: FinSpace, name: str = "") -> FinGroupoid:
    """Only identity arrows; G1 is a copy of S."""
    G1 = FinSpace([f"1{p}" for p in S.points], S.leq, name=f"1_{S.name}")
    ident = list(range(S.n))
    return FinGroupoid(S, G1, ident, ident, lambda g, h: g, ident, ident, name=name or f"unit_{S.name}")


def z2_on_sierpinski(name: str = "z2_sierp") -> FinGroupoid:
    """Z/2 whose arrow space is Sierpiński (e closed, g open): m is not continuous."""
    G1 = FinSpace.from_order(["e", "g"], [("e", "g")], name="sierpZ2")
    return FinGroupoid(point(), G1, [0, 0], [0, 0], lambda g, h: (g + h) % 2, [0, 1], [0], name=name)


def pair_sierpinski(name: str = "pair_sierp") -> FinGroupoid:
    return pair_space_groupoid(sierpinski(), name=name)


def groupoid_from_tables(G0: FinSpace, G1: FinSpace, d: dict, r: dict, mult: dict, inv: dict, unit: dict,
                         name: str = "") -> FinGroupoid:
    """Build from label tables; ``mult`` maps (g, h) label pairs to labels."""
    mt = {(G1[g], G1[h]): G1[v] for (g, h), v in mult.items()}
    G = FinGroupoid(G0, G1, [G0[d[p]] for p in G1.points], [G0[r[p]] for p in G1.points],
                    lambda g, h: mt.get((g, h)), [G1[inv[p]] for p in G1.points], [G1[unit[p]] for p in G0.points],
                    name=name)
    extra = [k for k in mt if k not in G.G2.coord_index]
    if extra:
        g, h = extra[0]
        raise StructuralError(f"groupoid {name}: product {G1.points[g]}·{G1.points[h]} given for non-composable pair")
    return G


def mult_table(G: FinGroupoid) -> dict:
    return {(G.G1.points[g], G.G1.points[h]): G.G1.points[G.m.fn[k]] for k, (g, h) in enumerate(G.G2.coords)}
