"""Finite spaces as locales.

A finite space is a set of points with a specialization preorder; its opens
are the up-sets.  Indiscrete carriers (not T0) are allowed because some corpus
groupoids use them.  Point-level criteria are exact for finite spaces and are
cross-checked against the frame-side definitions whenever the frames are
small enough to enumerate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .checks import Check, failed, first_index, incident, passed, skipped
from .errors import CapacityError, StructuralError
from .suplat import MonotoneMap, SupLattice, SupMap, left_adjoint, set_label

MAX_OPENS = 1 << 16
FRAME_CROSSCHECK = 4096


def bits(mask: int) -> Iterable[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class FinSpace:
    def __init__(self, points: Sequence[str], leq, name: str = ""):
        self.points = tuple(str(p) for p in points)
        self.n = len(self.points)
        if len(set(self.points)) != self.n:
            raise StructuralError(f"duplicate point names in space {name!r}")
        self.index = {p: i for i, p in enumerate(self.points)}
        self.leq = np.asarray(leq, dtype=bool).reshape(self.n, self.n)
        self.name = name
        if self.n and not self.leq.diagonal().all():
            raise StructuralError(f"space {name!r}: specialization order is not reflexive")
        if self.n and (((self.leq.astype(np.int64) @ self.leq.astype(np.int64)) > 0) & ~self.leq).any():
            raise StructuralError(f"space {name!r}: specialization order is not transitive")
        self.up = [sum(1 << int(j) for j in np.flatnonzero(self.leq[i])) for i in range(self.n)]
        self.down = [sum(1 << int(j) for j in np.flatnonzero(self.leq[:, i])) for i in range(self.n)]
        self._opens = None
        self._frame = None

    # -- builders ---------------------------------------------------------
    @classmethod
    def from_order(cls, points: Sequence[str], pairs: Iterable[tuple[str, str]] = (), name: str = "") -> "FinSpace":
        """Space whose specialization preorder is generated by pairs (x, y), x <= y."""
        points = list(points)
        idx = {p: i for i, p in enumerate(points)}
        n = len(points)
        leq = np.eye(n, dtype=bool)
        for a, b in pairs:
            for p in (a, b):
                if p not in idx:
                    raise StructuralError(f"space {name!r}: unknown point {p!r}")
            leq[idx[a], idx[b]] = True
        while n:
            nxt = ((leq.astype(np.int64) @ leq.astype(np.int64)) > 0) | leq
            if (nxt == leq).all():
                break
            leq = nxt
        return cls(points, leq, name=name)

    @classmethod
    def discrete(cls, points: Sequence[str], name: str = "") -> "FinSpace":
        return cls(points, np.eye(len(points), dtype=bool), name=name)

    @classmethod
    def indiscrete(cls, points: Sequence[str], name: str = "") -> "FinSpace":
        return cls(points, np.ones((len(points), len(points)), dtype=bool), name=name)

    def __repr__(self):
        return f"FinSpace({self.name or '?'}, {self.n} points)"

    def __getitem__(self, p: str) -> int:
        try:
            return self.index[p]
        except KeyError:
            raise StructuralError(f"unknown point {p!r} in space {self.name or '?'}") from None

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def is_t0(self) -> bool:
        return not (self.leq & self.leq.T & ~np.eye(self.n, dtype=bool)).any()

    def is_discrete(self) -> bool:
        return bool((self.leq == np.eye(self.n, dtype=bool)).all())

    def mask_of(self, pts: Iterable[str]) -> int:
        return sum(1 << self[p] for p in pts)

    def set_label(self, mask: int) -> str:
        return set_label(self.points[i] for i in bits(mask))

    def is_open(self, mask: int) -> bool:
        return all(self.up[i] & ~mask == 0 for i in bits(mask))

    def up_closure(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= self.up[i]
        return out

    def down_closure(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= self.down[i]
        return out

    def interior(self, mask: int) -> int:
        return sum(1 << i for i in range(self.n) if self.up[i] & ~mask == 0)

    def opens(self, limit: int = MAX_OPENS) -> list[int]:
        """All up-sets, as point bitmasks."""
        if self._opens is None:
            seen = {0}
            frontier = [0]
            gens = sorted(set(self.up))
            while frontier:
                nxt = []
                for u in frontier:
                    for g in gens:
                        v = u | g
                        if v not in seen:
                            seen.add(v)
                            nxt.append(v)
                            if len(seen) > limit:
                                raise CapacityError(f"space {self.name} has more than {limit} opens")
                frontier = nxt
            self._opens = sorted(seen, key=lambda m: (bin(m).count("1"), m))
        return self._opens

    def count_opens_bounded(self, limit: int) -> bool:
        """True when the space has at most ``limit`` opens."""
        try:
            self.opens(limit)
            return True
        except CapacityError:
            return False

    @property
    def frame(self) -> SupLattice:
        if self._frame is None:
            self._frame = SupLattice.from_sets(self.opens(), self.set_label, name=f"O({self.name})")
        return self._frame

    def open_id(self, mask: int) -> int:
        """Frame element id of an open given as a point mask."""
        try:
            return self.frame._mask_index[mask]
        except KeyError:
            raise StructuralError(f"{self.set_label(mask)} is not open in {self.name}") from None

    def open_mask(self, i: int) -> int:
        return self.frame.masks[int(i)]

    def open_by_points(self, pts: Iterable[str]) -> int:
        return self.open_id(self.mask_of(pts))


def opens_of(S: FinSpace) -> SupLattice:
    """The frame of opens; distributivity is certified by the caller via validate."""
    return S.frame


def point() -> FinSpace:
    return FinSpace(["*"], [[True]], name="pt")


def sierpinski() -> FinSpace:
    return FinSpace.from_order(["⊥", "⊤"], [("⊥", "⊤")], name="sierp")


def product(A: FinSpace, B: FinSpace, name: str = "") -> tuple[FinSpace, "CMap", "CMap"]:
    pts = [(a, b) for a in range(A.n) for b in range(B.n)]
    return _subproduct([A, B], pts, name or f"{A.name}×{B.name}")


def _subproduct(spaces: Sequence[FinSpace], tuples: Sequence[tuple[int, ...]], name: str):
    labels = ["(" + ",".join(S.points[c] for S, c in zip(spaces, t)) + ")" for t in tuples]
    n = len(tuples)
    leq = np.ones((n, n), dtype=bool)
    if n:
        arr = np.array(tuples, dtype=np.int64).reshape(n, len(spaces))
        for k, S in enumerate(spaces):
            leq &= S.leq[arr[:, k][:, None], arr[:, k][None, :]]
    P = FinSpace(labels, leq, name=name)
    P.coords = list(tuples)
    P.coord_index = {t: i for i, t in enumerate(tuples)}
    projs = [CMap(P, S, [t[k] for t in tuples], name=f"π{k + 1}") for k, S in enumerate(spaces)]
    return (P, *projs)


# -- maps -------------------------------------------------------------------

class CMap:
    """A point function between finite spaces (continuity is checked, not assumed)."""

    def __init__(self, source: FinSpace, target: FinSpace, fn: Sequence[int], name: str = ""):
        self.source = source
        self.target = target
        self.fn = tuple(int(v) for v in fn)
        self.name = name
        if len(self.fn) != source.n:
            raise StructuralError(f"map {name!r}: {len(self.fn)} values for {source.n} points")
        for i, v in enumerate(self.fn):
            if not 0 <= v < target.n:
                raise StructuralError(f"map {name!r}: point {source.points[i]!r} has no image")

    @classmethod
    def from_labels(cls, source: FinSpace, target: FinSpace, pairs: dict, name: str = "") -> "CMap":
        fn = []
        for p in source.points:
            if p not in pairs:
                raise StructuralError(f"map {name!r} undefined at point {p!r}")
            fn.append(target[pairs[p]])
        return cls(source, target, fn, name)

    def __call__(self, i: int) -> int:
        return self.fn[i]

    def __eq__(self, other):
        return isinstance(other, CMap) and self.fn == other.fn and self.source.points == other.source.points \
            and self.target.points == other.target.points

    def __hash__(self):
        return hash(self.fn)

    def by_label(self, p: str) -> str:
        return self.target.points[self.fn[self.source[p]]]

    def as_dict(self) -> dict[str, str]:
        return {p: self.target.points[v] for p, v in zip(self.source.points, self.fn)}

    def then(self, g: "CMap") -> "CMap":
        if g.source.points != self.target.points:
            raise StructuralError(f"cannot compose {g.name} after {self.name}")
        return CMap(self.source, g.target, [g.fn[v] for v in self.fn], name=f"{g.name}∘{self.name}")

    def preimage(self, mask: int) -> int:
        return sum(1 << i for i, v in enumerate(self.fn) if mask >> v & 1)

    def image(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= 1 << self.fn[i]
        return out

    def is_injective(self) -> bool:
        return len(set(self.fn)) == len(self.fn)

    def is_surjective(self) -> bool:
        return len(set(self.fn)) == self.target.n

    def inverse_image_map(self) -> SupMap:
        """f* : O(target) -> O(source) as a frame map."""
        S, T = self.source, self.target
        return SupMap(T.frame, S.frame, [S.open_id(self.preimage(u)) for u in T.frame.masks], name=f"{self.name}*")


def identity_map(S: FinSpace) -> CMap:
    return CMap(S, S, range(S.n), name="id")


def inclusion(S: FinSpace, pts: Sequence[str], name: str = "") -> CMap:
    sub = subspace(S, S.mask_of(pts))
    return CMap(sub, S, [S[p] for p in sub.points], name=name or "incl")


def subspace(S: FinSpace, mask: int, name: str = "") -> FinSpace:
    idx = list(bits(mask))
    return FinSpace([S.points[i] for i in idx], S.leq[np.ix_(idx, idx)], name=name or f"{S.name}|{S.set_label(mask)}")


def continuity_witness(f: CMap) -> tuple | None:
    """(point, open) where the preimage of the open misses a point it must contain."""
    S, T = f.source, f.target
    fn = np.array(f.fn, dtype=np.int64)
    bad = S.leq & ~T.leq[fn[:, None], fn[None, :]] if S.n else np.zeros((0, 0), bool)
    hits = np.argwhere(bad)
    if len(hits) == 0:
        return None
    x, y = (int(v) for v in hits[0])
    return (S.points[y], T.set_label(T.up[f.fn[x]]))


def openness_witness(f: CMap) -> tuple | None:
    """Point x whose basic open ↑x has an image that is not open up to equivalence.

    Every point above f(↑x) must be equivalent to a point of f(↑x); on T0
    spaces this says f(↑x) is open, and in general it is the point form of
    Frobenius reciprocity for f_! ⊣ f*.
    """
    T = f.target
    for x in range(f.source.n):
        img = f.image(f.source.up[x])
        up = T.up_closure(img)
        sat = 0
        for v in bits(img):
            sat |= T.up[v] & T.down[v]
        if up != sat:
            return (f.source.points[x], T.set_label(img))
    return None


def _embeds(f: CMap, mask: int) -> tuple | None:
    """Failure of f restricted to ``mask`` being an order embedding (or injective)."""
    S, T = f.source, f.target
    idx = list(bits(mask))
    for a, b in itertools.combinations(idx, 2):
        if f.fn[a] == f.fn[b]:
            return ("not injective", S.points[a], S.points[b])
    for a in idx:
        for b in idx:
            if T.leq[f.fn[a], f.fn[b]] and not S.leq[a, b]:
                return ("order not reflected", S.points[a], S.points[b])
    return None


def local_homeo_witness(f: CMap) -> tuple | None:
    S, T = f.source, f.target
    for x in range(S.n):
        nb = S.up[x]
        w = _embeds(f, nb)
        if w is not None:
            return (S.points[x],) + w
        if not T.is_open(f.image(nb)):
            return (S.points[x], "image not open", T.set_label(f.image(nb)))
    return None


def regular_open_mono_witness(f: CMap) -> tuple | None:
    w = _embeds(f, f.source.full)
    if w is not None:
        return w
    img = f.image(f.source.full)
    if not f.target.is_open(img):
        return ("image not open", f.target.set_label(img))
    return None


def epi_witness(f: CMap) -> tuple | None:
    """Target point y with no image point equivalent to it (inverse image not injective)."""
    S, T = f.source, f.target
    img = set(f.fn)
    for y in range(T.n):
        if not any(T.leq[y, v] and T.leq[v, y] for v in img):
            return (T.points[y],)
    return None


def frame_open_witness(f: CMap) -> tuple | None:
    """Frame-side openness: f_! ⊣ f* with Frobenius f_!(a ∧ f*b) = f_!(a) ∧ b."""
    fstar = f.inverse_image_map()
    fshriek = left_adjoint(fstar)
    S, T = f.source.frame, f.target.frame
    fs = np.asarray(fstar.table, dtype=np.int64)
    fl = np.asarray(fshriek.table, dtype=np.int64)
    lhs = fl[S.meet[:, fs]]  # [a, b] = f_!(a ∧ f*b)
    rhs = T.meet[fl]  # [a, b] = f_!(a) ∧ b
    hit = first_index(lhs != rhs)
    return None if hit is None else (S.label(hit[0]), T.label(hit[1]))


def frame_epi_witness(f: CMap) -> tuple | None:
    fstar = f.inverse_image_map()
    seen = {}
    for u in range(fstar.source.n):
        v = fstar(u)
        if v in seen:
            return (fstar.source.label(seen[v]), fstar.source.label(u))
        seen[v] = u
    return None


def _small(f: CMap) -> bool:
    return f.source.count_opens_bounded(FRAME_CROSSCHECK) and f.target.count_opens_bounded(FRAME_CROSSCHECK)


@dataclass
class MapClass:
    continuous: Check
    open: Check
    local_homeo: Check
    regular_open_mono: Check
    epi: Check
    crosschecks: list[Check] = field(default_factory=list)

    def checks(self) -> list[Check]:
        return [self.continuous, self.open, self.local_homeo, self.regular_open_mono, self.epi] + self.crosschecks

    def flags(self) -> dict[str, bool | None]:
        def flag(c):
            return None if c.status == "skipped" else c.passed
        return {"continuous": flag(self.continuous), "open": flag(self.open), "local_homeo": flag(self.local_homeo),
                "regular_open_mono": flag(self.regular_open_mono), "epi": flag(self.epi)}


def classify_map(f: CMap, crosscheck: bool = True) -> MapClass:
    w = continuity_witness(f)
    if w is not None:
        na = "not applicable: map is not continuous"
        return MapClass(failed("continuous", w), skipped("open", na), skipped("local_homeo", na),
                        skipped("regular_open_mono", na), skipped("epi", na))
    ow = openness_witness(f)
    out = MapClass(passed("continuous"),
                   passed("open") if ow is None else failed("open", ow),
                   _verdict("local_homeo", local_homeo_witness(f)),
                   _verdict("regular_open_mono", regular_open_mono_witness(f)),
                   _verdict("epi", epi_witness(f)))
    if crosscheck and _small(f):
        fw = frame_open_witness(f)
        if (fw is None) != (ow is None):
            out.crosschecks.append(incident("open.frame-agreement", fw or ow, "spatial and Frobenius openness disagree"))
        else:
            out.crosschecks.append(passed("open.frame-agreement"))
        ew = frame_epi_witness(f)
        if (ew is None) != out.epi.passed:
            out.crosschecks.append(incident("epi.frame-agreement", ew, "point and frame epi criteria disagree"))
        else:
            out.crosschecks.append(passed("epi.frame-agreement"))
    if out.local_homeo.passed and not out.open.passed:
        out.crosschecks.append(incident("local_homeo-implies-open", ow))
    return out


def _verdict(name, w):
    return passed(name) if w is None else failed(name, w)


def pullback(f: CMap, g: CMap, name: str = "") -> tuple[FinSpace, CMap, CMap]:
    """{(a, b) : f(a) = g(b)} with the product preorder and both projections."""
    if f.target.points != g.target.points:
        raise StructuralError("pullback of maps with different targets")
    pts = [(a, b) for a in range(f.source.n) for b in range(g.source.n) if f.fn[a] == g.fn[b]]
    return _subproduct([f.source, g.source], pts, name or f"{f.source.name}×{g.source.name}")


def pair_map(P: FinSpace, fs: Sequence[CMap], target: FinSpace) -> CMap:
    """The map P -> target (a subproduct) with coordinates given by ``fs``."""
    out = []
    for i in range(P.n):
        t = tuple(f.fn[i] for f in fs)
        if t not in target.coord_index:
            raise StructuralError(f"point {P.points[i]} does not land in {target.name}")
        out.append(target.coord_index[t])
    return CMap(P, target, out)


def all_point_functions(S: FinSpace, T: FinSpace, limit: int = 1 << 16):
    if T.n ** S.n > limit:
        raise CapacityError(f"{T.n}^{S.n} point functions exceed the limit {limit}")
    for fn in itertools.product(range(T.n), repeat=S.n):
        yield CMap(S, T, fn)


def saturation(S: FinSpace, classes: Sequence[int]) -> list[int]:
    """Class id of each point is given; returns the class masks."""
    k = max(classes, default=-1) + 1
    out = [0] * k
    for i, c in enumerate(classes):
        out[c] |= 1 << i
    return out


def quotient_space(S: FinSpace, classes: Sequence[int], labels: Sequence[str] | None = None,
                   name: str = "") -> tuple[FinSpace, CMap]:
    """Quotient by a partition (class id per point); opens are the saturated opens."""
    blocks = saturation(S, classes)
    k = len(blocks)
    leq = np.zeros((k, k), dtype=bool)
    for c in range(k):
        # smallest saturated open containing block c
        m = blocks[c]
        while True:
            up = S.up_closure(m)
            sat = 0
            for d in range(k):
                if blocks[d] & up:
                    sat |= blocks[d]
            if sat == m:
                break
            m = sat
        for d in range(k):
            leq[c, d] = bool(blocks[d] & m)
    if labels is None:
        labels = ["[" + ",".join(S.points[i] for i in bits(b)) + "]" for b in blocks]
    Q = FinSpace(labels, leq, name=name or f"{S.name}/~")
    Q.blocks = blocks
    return Q, CMap(S, Q, classes, name="quotient")


def kolmogorov(S: FinSpace) -> tuple[FinSpace, CMap]:
    """T0 reflection."""
    cls: list[int] = []
    reps: list[int] = []
    for i in range(S.n):
        for c, r in enumerate(reps):
            if S.leq[i, r] and S.leq[r, i]:
                cls.append(c)
                break
        else:
            reps.append(i)
            cls.append(len(reps) - 1)
    return quotient_space(S, cls, name=f"T0({S.name})")


def pullback_identification(f: CMap, g: CMap, limit: int = 1 << 16, info: dict | None = None) -> tuple | None:
    """Whether O(A)⊗_{O(C)}O(B) → O(A ×_C B), x⊗y ↦ π1⁻¹x ∩ π2⁻¹y, is a bijection.

    Returns None or a witness: two colliding tensor elements, or a missed open.
    When the tensor is too large to enumerate and C is discrete, both sides
    split as products over the points of C and each fibre is checked on its
    own; ``info["method"]`` then reads "fibrewise".
    """
    info = info if info is not None else {}
    C = f.target
    split = C.is_discrete() and C.n > 1
    try:
        info["method"] = "direct"
        return _pullback_identification(f, g, min(limit, 1 << 14) if split else limit)
    except CapacityError:
        if not split:
            raise
    info["method"] = "fibrewise"
    pt = FinSpace(["*"], np.ones((1, 1), bool), name="pt")
    for c in range(C.n):
        ma, mb = f.preimage(1 << c), g.preimage(1 << c)
        if not ma or not mb:
            continue  # both sides are the one-element frame
        fc = CMap(subspace(f.source, ma), pt, [0] * bin(ma).count("1"))
        gc = CMap(subspace(g.source, mb), pt, [0] * bin(mb).count("1"))
        w = _pullback_identification(fc, gc, limit)
        if w is not None:
            return ("fibre", C.points[c]) + w
    return None


def _pullback_identification(f: CMap, g: CMap, limit: int) -> tuple | None:
    from .tensor import BaseAction, TensorLattice, canonical_pullback_map

    A, B, C = f.source.frame, g.source.frame, f.target.frame
    right = np.array([[A._mask_index[v & f.preimage(c)] for c in C.masks] for v in A.masks], dtype=np.int64)
    left = np.array([[B._mask_index[v & g.preimage(c)] for v in B.masks] for c in C.masks], dtype=np.int64)
    T = TensorLattice([A, B], [BaseAction(C, right, left)])
    P, p1, p2 = pullback(f, g)
    canon = canonical_pullback_map(T, [lambda v: p1.preimage(A.masks[v]), lambda v: p2.preimage(B.masks[v])])
    seen: dict[int, int] = {}
    for e in T.elements(limit):
        m = canon(e)
        if m in seen:
            return ("not injective", T.describe(seen[m]), T.describe(e))
        seen[m] = e
    for u in P.opens():
        if u not in seen:
            return ("not surjective", P.set_label(u))
    return None
