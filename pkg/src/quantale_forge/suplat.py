"""Finite sup-lattices, join-preserving maps and their Galois adjoints.

Elements are integer ids ``0..n-1`` with string labels.  Every lattice keeps
its order relation, join table and meet table as numpy arrays, because all
downstream checks are join-bound and run exhaustively.
"""
from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

import numpy as np

from .checks import Check, first_index, passed, failed
from .errors import AdjointUndefinedError, StructuralError, UsageError

# Above this many subsets, join preservation is checked on pairs plus bottom.
MAX_EXHAUSTIVE_SUBSETS = 2 ** 20


def set_label(items: Iterable[str]) -> str:
    return "{" + ",".join(items) + "}"


class SupLattice:
    """A finite complete lattice.

    ``leq[x, y]`` is True when x <= y.  ``join``/``meet`` are n x n tables of
    ids; an entry of -1 marks a missing bound (only possible for inputs that
    fail :func:`validate`).  When the elements are sets of some universe,
    ``masks`` holds them as Python ints and joins of large families are
    computed by bitwise union.
    """

    def __init__(self, labels: Sequence[str], leq: np.ndarray, join: np.ndarray | None = None,
                 meet: np.ndarray | None = None, masks: Sequence[int] | None = None,
                 union_closed: bool = False, name: str = ""):
        self.labels = tuple(str(x) for x in labels)
        self.n = len(self.labels)
        if len(set(self.labels)) != self.n:
            raise StructuralError(f"duplicate element labels in lattice {name!r}")
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self.leq = np.asarray(leq, dtype=bool)
        self.name = name
        self.masks = tuple(masks) if masks is not None else None
        self.union_closed = union_closed and self.masks is not None
        if self.masks is not None:
            self._mask_index = {m: i for i, m in enumerate(self.masks)}
        if join is None or meet is None:
            j, m = _bound_tables(self.leq)
            join = j if join is None else join
            meet = m if meet is None else meet
        self.join = np.asarray(join, dtype=np.int64)
        self.meet = np.asarray(meet, dtype=np.int64)
        self._bottom = None
        self._top = None
        self._ji = None
        self._jbits = None
        self._distributive = None

    # -- construction -----------------------------------------------------
    @classmethod
    def from_order(cls, labels: Sequence[str], pairs: Iterable[tuple[str, str]], name: str = "") -> "SupLattice":
        """Build from covering (or any generating) pairs ``(x, y)`` meaning x <= y."""
        labels = list(labels)
        idx = {lab: i for i, lab in enumerate(labels)}
        n = len(labels)
        leq = np.eye(n, dtype=bool)
        for a, b in pairs:
            if a not in idx:
                raise StructuralError(f"unknown element {a!r}")
            if b not in idx:
                raise StructuralError(f"unknown element {b!r}")
            leq[idx[a], idx[b]] = True
        leq = _transitive_closure(leq)
        return cls(labels, leq, name=name)

    @classmethod
    def from_sets(cls, masks: Iterable[int], labeler: Callable[[int], str], name: str = "") -> "SupLattice":
        """Lattice of a family of sets closed under union and intersection."""
        ms = sorted({int(m) for m in masks}, key=lambda m: (bin(m).count("1"), m))
        n = len(ms)
        pos = {m: i for i, m in enumerate(ms)}
        if max(ms, default=0).bit_length() <= 62:
            arr = np.array(ms, dtype=np.int64)
            order = np.argsort(arr)
            sorted_arr = arr[order]

            def lookup(vals):
                k = np.searchsorted(sorted_arr, vals)
                k = np.clip(k, 0, n - 1)
                hit = sorted_arr[k] == vals
                return np.where(hit, order[k], -1)

            join = lookup(arr[:, None] | arr[None, :])
            meet = lookup(arr[:, None] & arr[None, :])
            leq = (arr[:, None] & arr[None, :]) == arr[:, None]
        else:
            join = np.array([[pos.get(a | b, -1) for b in ms] for a in ms], dtype=np.int64)
            meet = np.array([[pos.get(a & b, -1) for b in ms] for a in ms], dtype=np.int64)
            leq = np.array([[(a & b) == a for b in ms] for a in ms], dtype=bool)
        return cls([labeler(m) for m in ms], leq, join, meet, masks=ms, union_closed=True, name=name)

    @classmethod
    def from_closure(cls, masks: Iterable[int], closure: Callable[[int], int], labeler: Callable[[int], str],
                     name: str = "") -> "SupLattice":
        """Lattice of the closed sets of a closure operator (joins close unions)."""
        ms = sorted({int(m) for m in masks}, key=lambda m: (bin(m).count("1"), m))
        pos = {m: i for i, m in enumerate(ms)}
        n = len(ms)
        join = np.empty((n, n), dtype=np.int64)
        meet = np.empty((n, n), dtype=np.int64)
        leq = np.empty((n, n), dtype=bool)
        for i, a in enumerate(ms):
            for k in range(i, n):
                b = ms[k]
                join[i, k] = join[k, i] = pos.get(closure(a | b), -1)
                meet[i, k] = meet[k, i] = pos.get(a & b, -1)
                leq[i, k] = (a & b) == a
                leq[k, i] = (a & b) == b
        return cls([labeler(m) for m in ms], leq, join, meet, masks=ms, union_closed=False, name=name)

    # -- basic structure --------------------------------------------------
    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"SupLattice({self.name or '?'}, n={self.n})"

    def __getitem__(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise StructuralError(f"unknown element {label!r} in lattice {self.name or '?'}") from None

    def label(self, i: int) -> str:
        return self.labels[int(i)]

    def labels_of(self, ids: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.labels[int(i)] for i in ids)

    @property
    def bottom(self) -> int:
        if self._bottom is None:
            cands = np.flatnonzero(self.leq.all(axis=1))
            if len(cands) != 1:
                raise StructuralError(f"lattice {self.name or '?'} has no bottom")
            self._bottom = int(cands[0])
        return self._bottom

    @property
    def top(self) -> int:
        if self._top is None:
            cands = np.flatnonzero(self.leq.all(axis=0))
            if len(cands) != 1:
                raise StructuralError(f"lattice {self.name or '?'} has no top")
            self._top = int(cands[0])
        return self._top

    def join2(self, a: int, b: int) -> int:
        return int(self.join[a, b])

    def meet2(self, a: int, b: int) -> int:
        return int(self.meet[a, b])

    def le(self, a: int, b: int) -> bool:
        return bool(self.leq[a, b])

    def elements(self) -> range:
        return range(self.n)

    def join_all(self, ids: Iterable[int]) -> int:
        ids = [int(i) for i in ids]
        if not ids:
            return self.bottom
        if self.union_closed:
            m = 0
            for i in ids:
                m |= self.masks[i]
            return self._mask_index[m]
        acc = ids[0]
        for i in ids[1:]:
            acc = int(self.join[acc, i])
        return acc

    def join_mask(self, selected: np.ndarray) -> int:
        """Join of the elements flagged True in a boolean vector."""
        ids = np.flatnonzero(selected)
        if self.union_closed and len(ids):
            m = 0
            for i in ids:
                m |= self.masks[i]
            return self._mask_index[m]
        return self.join_all(ids)

    def meet_all(self, ids: Iterable[int]) -> int:
        ids = [int(i) for i in ids]
        if not ids:
            return self.top
        acc = ids[0]
        for i in ids[1:]:
            acc = int(self.meet[acc, i])
        return acc

    def join_irreducibles(self) -> tuple[int, ...]:
        """Ids of the join-irreducible elements, in id order."""
        if self._ji is None:
            out = []
            for x in range(self.n):
                below = np.flatnonzero(self.leq[:, x])
                below = below[below != x]
                if x != self.bottom and self.join_all(below) != x:
                    out.append(x)
            self._ji = tuple(out)
        return self._ji

    def jbits(self, x: int) -> int:
        """Bitmask over positions of :meth:`join_irreducibles` below x."""
        if self._jbits is None:
            ji = self.join_irreducibles()
            table = []
            for y in range(self.n):
                m = 0
                for pos, j in enumerate(ji):
                    if self.leq[j, y]:
                        m |= 1 << pos
                table.append(m)
            self._jbits = table
        return self._jbits[int(x)]

    def is_distributive(self) -> bool:
        if self._distributive is None:
            # a family of sets closed under union and intersection is distributive
            self._distributive = self.union_closed or distributivity_witness(self) is None
        return self._distributive

    def is_chain(self) -> bool:
        return bool((self.leq | self.leq.T).all())


BOUND_TABLE_LIMIT = 64


def _transitive_closure(leq: np.ndarray) -> np.ndarray:
    r = leq.copy()
    while True:
        nxt = (r.astype(np.int64) @ r.astype(np.int64)) > 0
        nxt |= r
        if (nxt == r).all():
            return r
        r = nxt


def _bound_tables(leq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Generic least-upper/greatest-lower bound tables; -1 where missing."""
    n = leq.shape[0]
    join = np.full((n, n), -1, dtype=np.int64)
    meet = np.full((n, n), -1, dtype=np.int64)
    not_leq = (~leq).astype(np.int64)
    for x in range(n):
        ub = leq[x][None, :] & leq  # ub[y, z]: x<=z and y<=z
        # c is least in ub[y] iff c in ub[y] and every ub[y] element is above c
        bad = ub.astype(np.int64) @ not_leq.T  # bad[y, c] = #{z in ub[y] : not c<=z}
        least = ub & (bad == 0)
        has = least.any(axis=1)
        join[x, has] = least[has].argmax(axis=1)
        lb = leq[:, x][None, :] & leq.T  # lb[y, z]: z<=x and z<=y
        bad = lb.astype(np.int64) @ (~leq).astype(np.int64)  # bad[y, c] = #{z in lb[y]: not z<=c}
        greatest = lb & (bad == 0)
        has = greatest.any(axis=1)
        meet[x, has] = greatest[has].argmax(axis=1)
    return join, meet


# -- standard lattices ----------------------------------------------------

def powerset(items: Sequence[str], name: str = "") -> SupLattice:
    items = list(items)

    def lab(m):
        return set_label(items[i] for i in range(len(items)) if m >> i & 1)

    return SupLattice.from_sets(range(1 << len(items)), lab, name=name or f"P{{{','.join(items)}}}")


def chain(n: int, name: str = "") -> SupLattice:
    """The n-element chain 0 < 1 < ... < n-1."""
    labels = [str(i) for i in range(n)]
    return SupLattice.from_order(labels, zip(labels, labels[1:]), name=name or f"C{n}")


def diamond(name: str = "M3") -> SupLattice:
    """The five-element modular, non-distributive lattice M3."""
    return SupLattice.from_order(["0", "a", "b", "c", "1"],
                                 [("0", "a"), ("0", "b"), ("0", "c"), ("a", "1"), ("b", "1"), ("c", "1")], name=name)


def pentagon(name: str = "N5") -> SupLattice:
    return SupLattice.from_order(["0", "a", "b", "c", "1"],
                                 [("0", "a"), ("a", "b"), ("b", "1"), ("0", "c"), ("c", "1")], name=name)


def dual(L: SupLattice) -> SupLattice:
    """The opposite lattice (same labels, reversed order)."""
    return SupLattice(L.labels, L.leq.T.copy(), L.meet.copy(), L.join.copy(), name=f"{L.name}^op")


def small_lattices(max_size: int = 4) -> list[SupLattice]:
    """All lattices with at most ``max_size`` elements up to isomorphism (max_size <= 5)."""
    out = [chain(1), chain(2), chain(3)]
    if max_size >= 4:
        out += [chain(4), powerset(["a", "b"], name="2x2")]
    if max_size >= 5:
        out += [chain(5), diamond(), pentagon(),
                SupLattice.from_order(["0", "a", "b", "c", "1"], [("0", "a"), ("a", "b"), ("a", "c"), ("b", "1"), ("c", "1")], name="1+2x2"),
                SupLattice.from_order(["0", "a", "b", "c", "1"], [("0", "a"), ("0", "b"), ("a", "c"), ("b", "c"), ("c", "1")], name="2x2+1")]
    return [L for L in out if L.n <= max_size]


# -- maps -----------------------------------------------------------------

class LatticeMap:
    """A total function between the element sets of two lattices."""

    def __init__(self, source: SupLattice, target: SupLattice, table, name: str = ""):
        self.source = source
        self.target = target
        self.table = np.asarray(table, dtype=np.int64)
        self.name = name
        if self.table.shape != (source.n,):
            raise StructuralError(f"map {name!r} table has {self.table.shape[0]} entries, source has {source.n}")
        bad = np.flatnonzero((self.table < 0) | (self.table >= target.n))
        if len(bad):
            raise StructuralError(f"map {name!r} sends {source.label(bad[0])} outside the target")

    @classmethod
    def from_labels(cls, source: SupLattice, target: SupLattice, pairs: dict, name: str = ""):
        missing = [x for x in source.labels if x not in pairs]
        if missing:
            raise StructuralError(f"map {name!r} undefined at {missing[0]!r}")
        return cls(source, target, [target[pairs[x]] for x in source.labels], name=name)

    def __call__(self, x: int) -> int:
        return int(self.table[int(x)])

    def by_label(self, label: str) -> str:
        return self.target.label(self.table[self.source[label]])

    def as_dict(self) -> dict[str, str]:
        return {self.source.label(i): self.target.label(v) for i, v in enumerate(self.table)}

    def __eq__(self, other) -> bool:
        return (isinstance(other, LatticeMap) and self.source is other.source and self.target is other.target
                and bool((self.table == other.table).all()))

    def __hash__(self):
        return hash((id(self.source), id(self.target), self.table.tobytes()))

    def then(self, g: "LatticeMap") -> "LatticeMap":
        """Composite ``g ∘ self``."""
        if g.source is not self.target and g.source.labels != self.target.labels:
            raise StructuralError("composition of maps with mismatched lattices")
        cls = SupMap if isinstance(self, SupMap) and isinstance(g, SupMap) else MonotoneMap
        return cls(self.source, g.target, g.table[self.table], name=f"{g.name}∘{self.name}")

    def is_injective(self) -> bool:
        return len(np.unique(self.table)) == self.source.n

    def is_surjective(self) -> bool:
        return len(np.unique(self.table)) == self.target.n

    def image(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unique(self.table))


class MonotoneMap(LatticeMap):
    pass


class SupMap(LatticeMap):
    """A map intended to preserve all joins; see :func:`validate`."""


def identity(L: SupLattice) -> SupMap:
    return SupMap(L, L, np.arange(L.n), name="id")


def constant(L: SupLattice, M: SupLattice, value: int) -> LatticeMap:
    cls = SupMap if value == M.bottom else MonotoneMap
    return cls(L, M, np.full(L.n, value), name=f"const-{M.label(value)}")


def monotone_witness(f: LatticeMap) -> tuple | None:
    S, T = f.source, f.target
    bad = S.leq & ~T.leq[f.table[:, None], f.table[None, :]]
    hit = first_index(bad)
    return None if hit is None else S.labels_of(hit)


def join_witness(f: LatticeMap, max_subsets: int = MAX_EXHAUSTIVE_SUBSETS) -> tuple | None:
    """Minimal subset S with f(⋁S) != ⋁f(S), or None when f preserves all joins.

    Small sources are checked on every subset; larger ones on the empty set and
    all pairs, which is equivalent for finite lattices.
    """
    S, T = f.source, f.target
    if f(S.bottom) != T.bottom:
        return ()
    if (1 << S.n) <= max_subsets:
        joins = np.zeros(1 << S.n, dtype=np.int64)
        fjoins = np.zeros(1 << S.n, dtype=np.int64)
        joins[0], fjoins[0] = S.bottom, T.bottom
        for k in range(S.n):
            lo, hi = 1 << k, 1 << (k + 1)
            joins[lo:hi] = S.join[joins[:lo], k]
            fjoins[lo:hi] = T.join[fjoins[:lo], f.table[k]]
        bad = np.flatnonzero(f.table[joins] != fjoins)
        if len(bad) == 0:
            return None
        # minimal: fewest elements, then lexicographic
        best = min(bad, key=lambda s: (bin(int(s)).count("1"), [i for i in range(S.n) if s >> i & 1]))
        return S.labels_of(i for i in range(S.n) if best >> i & 1)
    bad = f.table[S.join] != T.join[f.table[:, None], f.table[None, :]]
    hit = first_index(bad)
    return None if hit is None else S.labels_of(hit)


def meet_witness(f: LatticeMap) -> tuple | None:
    """Pair (or empty tuple for top) whose meet is not preserved."""
    S, T = f.source, f.target
    if f(S.top) != T.top:
        return ()
    bad = f.table[S.meet] != T.meet[f.table[:, None], f.table[None, :]]
    hit = first_index(bad)
    return None if hit is None else S.labels_of(hit)


def distributivity_witness(L: SupLattice) -> tuple | None:
    """Lexicographically minimal (x, (y, z)) with x∧(y∨z) != (x∧y)∨(x∧z)."""
    if (L.join < 0).any() or (L.meet < 0).any():
        raise UsageError("distributivity needs a lattice with all binary bounds")
    for x in range(L.n):
        lhs = L.meet[x][L.join]
        rhs = L.join[L.meet[x][:, None], L.meet[x][None, :]]
        hit = first_index(lhs != rhs)
        if hit is not None:
            return (L.label(x), L.labels_of(hit))
    return None


def join_of(L: SupLattice, S: Iterable[str]) -> str:
    """Join of a set of element labels."""
    return L.label(L.join_all(L[s] for s in S))


def right_adjoint(f: LatticeMap) -> MonotoneMap:
    """The right adjoint f_*(y) = ⋁{x : f(x) <= y} of a join-preserving map."""
    w = join_witness(f)
    if w is not None:
        raise AdjointUndefinedError(f"map {f.name!r} does not preserve the join of {w}", w)
    S, T = f.source, f.target
    below = T.leq[f.table, :]  # below[x, y]: f(x) <= y
    table = [S.join_mask(below[:, y]) for y in range(T.n)]
    return MonotoneMap(T, S, table, name=f"{f.name}_*")


def left_adjoint(g: LatticeMap) -> MonotoneMap:
    """The left adjoint g_!(x) = ⋀{y : x <= g(y)} of a meet-preserving map."""
    w = meet_witness(g)
    if w is not None:
        raise AdjointUndefinedError(f"map {g.name!r} does not preserve the meet of {w}", w)
    S, T = g.source, g.target
    above = T.leq[:, g.table]  # above[x, y]: x <= g(y)
    table = [S.meet_all(np.flatnonzero(above[x])) for x in range(T.n)]
    return MonotoneMap(T, S, table, name=f"{g.name}_!")


def adjunction_witness(f: LatticeMap, g: LatticeMap) -> tuple | None:
    """First (x, y) violating f(x) <= y  <=>  x <= g(y)."""
    lhs = f.target.leq[f.table, :]
    rhs = f.source.leq[:, g.table]
    hit = first_index(lhs != rhs)
    return None if hit is None else (f.source.label(hit[0]), f.target.label(hit[1]))


def validate(obj, kind: str) -> Check:
    """Check a lattice or map against a named invariant package."""
    if kind == "suplattice":
        return verdict_lattice(obj)
    if kind == "supmap":
        if not isinstance(obj, LatticeMap):
            raise UsageError("supmap validation needs a map")
        w = monotone_witness(obj)
        if w is not None:
            return failed("supmap.monotone", w)
        w = join_witness(obj)
        return passed("supmap.joins") if w is None else failed("supmap.joins", w)
    if kind == "frame-distributivity":
        w = distributivity_witness(obj)
        return passed("frame-distributivity") if w is None else failed("frame-distributivity", w)
    raise UsageError(f"unknown validation kind {kind!r}")


def verdict_lattice(L: SupLattice) -> Check:
    leq = L.leq
    if not leq.diagonal().all():
        return failed("suplattice.reflexive", (L.label(np.flatnonzero(~leq.diagonal())[0]),))
    hit = first_index(leq & leq.T & ~np.eye(L.n, dtype=bool))
    if hit is not None:
        return failed("suplattice.antisymmetric", L.labels_of(hit))
    comp = (leq.astype(np.int64) @ leq.astype(np.int64)) > 0
    hit = first_index(comp & ~leq)
    if hit is not None:
        return failed("suplattice.transitive", L.labels_of(hit))
    if L.n == 0 or leq.all(axis=1).sum() != 1:
        return failed("suplattice.bottom", ())
    if L.n > BOUND_TABLE_LIMIT:
        return _verify_tables(L)
    _j, _m = _bound_tables(leq)
    hit = first_index(_j < 0)
    if hit is not None:
        return failed("suplattice.joins", L.labels_of(hit))
    hit = first_index(_m < 0)
    if hit is not None:
        return failed("suplattice.meets", L.labels_of(hit))
    hit = first_index((_j != L.join) | (_m != L.meet))
    if hit is not None:
        return failed("suplattice.tables", L.labels_of(hit))
    return passed("suplattice")


def _verify_tables(L: SupLattice) -> Check:
    """Stored join and meet are least upper and greatest lower bounds, row by row."""
    leq = L.leq
    for x in range(L.n):
        j = L.join[x]
        ok_ub = leq[x, j] & leq[np.arange(L.n), j]
        ub = leq[x][None, :] & leq
        ok_least = ~(ub & ~leq[j]).any(axis=1)
        bad = np.flatnonzero(~(ok_ub & ok_least))
        if bad.size:
            return failed("suplattice.joins", L.labels_of((x, int(bad[0]))))
        m = L.meet[x]
        ok_lb = leq[m, x] & leq[m, np.arange(L.n)]
        lb = leq[:, x][None, :] & leq.T
        ok_greatest = ~(lb & ~leq[:, m].T).any(axis=1)
        bad = np.flatnonzero(~(ok_lb & ok_greatest))
        if bad.size:
            return failed("suplattice.meets", L.labels_of((x, int(bad[0]))))
    return passed("suplattice")


# -- isomorphism ------------------------------------------------------------

def find_isomorphism(L: SupLattice, M: SupLattice) -> np.ndarray | None:
    """An order isomorphism L -> M as an id table, or None.

    Searches bijections between join-irreducibles and extends by joins.
    """
    if L.n != M.n:
        return None
    JL, JM = L.join_irreducibles(), M.join_irreducibles()
    if len(JL) != len(JM):
        return None
    sub_l = L.leq[np.ix_(JL, JL)]
    sub_m = M.leq[np.ix_(JM, JM)]
    deg_l = [(int(sub_l[:, a].sum()), int(sub_l[a].sum())) for a in range(len(JL))]
    deg_m = [(int(sub_m[:, b].sum()), int(sub_m[b].sum())) for b in range(len(JM))]
    k = len(JL)
    assign = [-1] * k
    used = [False] * k

    def extend(pos: int):
        if pos == k:
            table = np.empty(L.n, dtype=np.int64)
            for x in range(L.n):
                table[x] = M.join_all(JM[assign[a]] for a in range(k) if L.leq[JL[a], x])
            if len(np.unique(table)) != L.n:
                return None
            if (L.leq != M.leq[np.ix_(table, table)]).any():
                return None
            return table
        for b in range(k):
            if used[b] or deg_l[pos] != deg_m[b]:
                continue
            if any(sub_l[pos, a] != sub_m[b, assign[a]] or sub_l[a, pos] != sub_m[assign[a], b] for a in range(pos)):
                continue
            used[b] = True
            assign[pos] = b
            res = extend(pos + 1)
            if res is not None:
                return res
            used[b] = False
        assign[pos] = -1
        return None

    return extend(0)


def all_supmaps(L: SupLattice, M: SupLattice, limit: int = 200_000) -> list[np.ndarray]:
    """Every join-preserving map L -> M, enumerated through join-irreducibles."""
    ji = L.join_irreducibles()
    if M.n ** len(ji) > limit:
        from .errors import CapacityError
        raise CapacityError(f"{M.n}^{len(ji)} candidate maps exceed the limit {limit}")
    out = []
    for vals in itertools.product(range(M.n), repeat=len(ji)):
        table = np.array([M.join_all(vals[a] for a, j in enumerate(ji) if L.leq[j, x]) for x in range(L.n)])
        # bottom plus binary joins is equivalent to all joins on a finite lattice
        if (table[L.bottom] == M.bottom and (table[L.join] == M.join[table[:, None], table[None, :]]).all()
                and all(table[j] == vals[a] for a, j in enumerate(ji))):
            out.append(table)
    return out


def rows_preserve_joins(L: SupLattice, P: SupLattice, rows: np.ndarray) -> bool:
    """Whether every row of ``rows`` (a map L -> P given by ids) preserves all joins.

    A map out of a finite lattice preserves joins exactly when it sends the
    bottom to the bottom and x ∨ j to f(x) ∨ f(j) for join-irreducible j.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    if (rows[:, L.bottom] != P.bottom).any():
        return False
    J = np.array(L.join_irreducibles(), dtype=np.int64)
    if len(J) == 0:
        return True
    lhs = rows[:, L.join[:, J]]
    rhs = P.join[rows[:, :, None], rows[:, J][:, None, :]]
    return bool((lhs == rhs).all())


def law_witness(bad, fast: Sequence[np.ndarray], full: Sequence[np.ndarray],
                labelers: Sequence[Callable[[int], str]], multilinear: bool = True) -> tuple | None:
    """Lexicographically first violation of a law given as a broadcasting predicate.

    ``bad(*idx)`` returns True where the law fails.  When both sides of the law
    preserve joins in every variable it suffices to test join-irreducibles
    (``fast``); the full scan over ``full`` runs only to locate the minimal
    witness once a failure is known, or when ``multilinear`` is False.
    """
    k = len(full)
    if multilinear:
        grids = np.ix_(*[np.asarray(f, dtype=np.int64) for f in fast])
        if not np.asarray(bad(*grids)).any():
            return None
    first = np.asarray(full[0], dtype=np.int64)
    rest = [np.asarray(f, dtype=np.int64) for f in full[1:]]
    grids = np.ix_(*rest) if rest else ()
    for a in first:
        mask = np.asarray(bad(int(a), *grids))
        if k == 1:
            if mask.any():
                return (labelers[0](int(a)),)
            continue
        hit = first_index(mask)
        if hit is not None:
            return (labelers[0](int(a)),) + tuple(labelers[i + 1](int(rest[i][h])) for i, h in enumerate(hit))
    return None
