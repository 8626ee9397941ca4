"""Tensor products of finite sup-lattices, optionally over base locales.

An element of ``L1 ⊗ ... ⊗ Lk`` is stored through its restriction to the grid
of join-irreducible tuples: a bi-ideal D is determined by which tuples
``(j1, ..., jk)`` it contains, and ``x1⊗...⊗xk <= D`` exactly when every tuple
below ``(x1, ..., xk)`` lies in D.  The restricted sets are the closed sets of
a closure operator with two kinds of rules:

* line closure: along each axis the present positions are ``J ∩ ↓x`` for the
  join x of the line (for distributive factors this is plain down-closure);
* exchange: for a base B acting between consecutive factors,
  ``(x·b) ⊗ y`` and ``x ⊗ (b·y)`` are identified, checked on generators.

Elements are Python ints used as bitmasks over the grid; joins close unions,
meets are intersections, order is inclusion.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, StructuralError, UsageError
from .suplat import SupLattice, SupMap

DEFAULT_MAX_GRID = 4096
DEFAULT_MAX_ELEMENTS = 1 << 16


@dataclass(frozen=True)
class BaseAction:
    """A base lattice B acting on the right of one factor and the left of the next.

    ``right[x, b]`` is x·b in the left factor, ``left[b, y]`` is b·y in the right one.
    """

    base: SupLattice
    right: np.ndarray
    left: np.ndarray


def _to_int(arr: np.ndarray) -> int:
    flat = np.ascontiguousarray(arr, dtype=bool).reshape(-1)
    return int.from_bytes(np.packbits(flat, bitorder="little").tobytes(), "little")


class TensorLattice:
    def __init__(self, factors: Sequence[SupLattice], links: Sequence[BaseAction | None] | None = None,
                 max_grid: int = DEFAULT_MAX_GRID, name: str = ""):
        self.factors = tuple(factors)
        k = len(self.factors)
        if k < 1:
            raise UsageError("a tensor needs at least one factor")
        self.links = tuple(links) if links is not None else (None,) * (k - 1)
        if len(self.links) != k - 1:
            raise StructuralError("need one base link between each pair of consecutive factors")
        self.name = name or "⊗".join(L.name or "?" for L in self.factors)
        self.J = [L.join_irreducibles() for L in self.factors]
        self.shape = tuple(len(j) for j in self.J)
        self.size = int(np.prod(self.shape)) if k else 0
        if self.size > max_grid:
            raise CapacityError(f"tensor {self.name}: generator grid {self.size} exceeds the limit {max_grid}")
        self._jpos = [{j: a for a, j in enumerate(J)} for J in self.J]
        # down[i][x]: boolean vector over J_i of generators below x
        self._down = [L.leq[np.array(J, dtype=np.int64), :].T.copy() if len(J) else np.zeros((L.n, 0), bool)
                      for L, J in zip(self.factors, self.J)]
        self._jleq = [L.leq[np.ix_(J, J)] if len(J) else np.zeros((0, 0), bool) for L, J in zip(self.factors, self.J)]
        self._distributive = [L.is_distributive() for L in self.factors]
        self._rules = []
        for i, link in enumerate(self.links):
            if link is None:
                continue
            B = link.base
            for b in B.join_irreducibles():
                # R[j', j] = j' <= j·b on axis i;  Lm[k', k] = k' <= b·k on axis i+1
                R = self._down[i][link.right[np.array(self.J[i], dtype=np.int64), b]].T if self.shape[i] else np.zeros((0, 0), bool)
                Lm = self._down[i + 1][link.left[b, np.array(self.J[i + 1], dtype=np.int64)]].T if self.shape[i + 1] else np.zeros((0, 0), bool)
                self._rules.append((i, R.astype(np.int64), Lm.astype(np.int64)))
        self._bottom = None
        self._cache: dict[int, int] = {}

    # -- conversions ------------------------------------------------------
    def to_array(self, mask: int) -> np.ndarray:
        raw = mask.to_bytes((self.size + 7) // 8 or 1, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[: self.size]
        return bits.astype(bool).reshape(self.shape)

    def from_array(self, arr: np.ndarray) -> int:
        return _to_int(arr)

    def point_index(self, pos: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(pos), self.shape))

    def points(self, mask: int) -> list[tuple[int, ...]]:
        """Generator tuples (as J positions) contained in an element."""
        return [tuple(int(v) for v in p) for p in np.argwhere(self.to_array(mask))]

    # -- closure ------------------------------------------------------------
    def _line_close(self, arr: np.ndarray) -> np.ndarray:
        for i, L in enumerate(self.factors):
            if self.shape[i] == 0:
                continue
            moved = np.moveaxis(arr, i, -1)
            if self._distributive[i]:
                # position a present if some present position lies above it
                closed = (moved.astype(np.int64) @ self._jleq[i].T.astype(np.int64)) > 0
            else:
                closed = moved.copy()
                flat = moved.reshape(-1, self.shape[i])
                out = closed.reshape(-1, self.shape[i])
                J = self.J[i]
                for r in range(flat.shape[0]):
                    present = [J[a] for a in np.flatnonzero(flat[r])]
                    out[r] = self._down[i][L.join_all(present)]
            arr = np.moveaxis(closed, -1, i)
        return arr

    def _exchange(self, arr: np.ndarray) -> np.ndarray:
        for i, R, Lm in self._rules:
            # A[.., j, k, ..]: every j' <= j·b has (.., j', k, ..) in arr
            missing = np.moveaxis((~arr).astype(np.int64), i, -1) @ R
            A = np.moveaxis(missing == 0, -1, i)
            # Bs[.., j, k, ..]: every k' <= b·k has (.., j, k', ..) in arr
            missing = np.moveaxis((~arr).astype(np.int64), i + 1, -1) @ Lm
            Bs = np.moveaxis(missing == 0, -1, i + 1)
            addB = np.moveaxis((np.moveaxis(A, i + 1, -1).astype(np.int64) @ Lm.T) > 0, -1, i + 1)
            addA = np.moveaxis((np.moveaxis(Bs, i, -1).astype(np.int64) @ R.T) > 0, -1, i)
            arr = arr | addA | addB
        return arr

    def closure(self, mask: int) -> int:
        hit = self._cache.get(mask)
        if hit is not None:
            return hit
        arr = self.to_array(mask)
        while True:
            new = self._exchange(self._line_close(arr))
            if (new == arr).all():
                break
            arr = new
        out = self.from_array(arr)
        if len(self._cache) < 200_000:
            self._cache[mask] = out
        return out

    def is_closed(self, mask: int) -> bool:
        return self.closure(mask) == mask

    # -- lattice interface --------------------------------------------------
    @property
    def bottom(self) -> int:
        if self._bottom is None:
            self._bottom = self.closure(0)
        return self._bottom

    @property
    def top(self) -> int:
        return (1 << self.size) - 1

    def join2(self, a: int, b: int) -> int:
        u = a | b
        if u == a or u == b:
            return u
        return self.closure(u)

    def meet2(self, a: int, b: int) -> int:
        return a & b

    def le(self, a: int, b: int) -> bool:
        return a & ~b == 0

    def join_all(self, items) -> int:
        m = 0
        for x in items:
            m |= x
        return self.closure(m) if m else self.bottom

    # -- generators ---------------------------------------------------------
    def rect(self, xs: Sequence[int]) -> int:
        """Unclosed set of generator tuples below (x1, ..., xk)."""
        if len(xs) != len(self.factors):
            raise StructuralError(f"tensor {self.name} has {len(self.factors)} factors, got {len(xs)} entries")
        arr = np.ones(self.shape, dtype=bool)
        for i, x in enumerate(xs):
            shape = [1] * len(self.shape)
            shape[i] = self.shape[i]
            arr = arr & self._down[i][int(x)].reshape(shape)
        return self.from_array(arr)

    def pure(self, xs: Sequence[int]) -> int:
        """The pure tensor x1 ⊗ ... ⊗ xk."""
        return self.closure(self.rect(xs))

    def tau(self, *xs: int) -> int:
        return self.pure(xs)

    def pure_by_label(self, *labels: str) -> int:
        return self.pure([L[x] for L, x in zip(self.factors, labels)])

    def contains(self, mask: int, xs: Sequence[int]) -> bool:
        """x1⊗...⊗xk <= mask."""
        return self.rect(xs) & ~mask == 0

    def point_generators(self) -> list[tuple[int, ...]]:
        """All generator tuples as factor element ids."""
        return [tuple(self.J[i][a] for i, a in enumerate(pos)) for pos in itertools.product(*map(range, self.shape))]

    def generator_masks(self) -> list[int]:
        return [self.pure(g) for g in self.point_generators()]

    def elements(self, limit: int = DEFAULT_MAX_ELEMENTS) -> list[int]:
        """Every element, found by closing joins of generator points."""
        seen = {self.bottom}
        frontier = [self.bottom]
        gens = sorted(set(self.generator_masks()))
        while frontier:
            nxt = []
            for e in frontier:
                for g in gens:
                    if g & ~e == 0:
                        continue
                    f = self.closure(e | g)
                    if f not in seen:
                        seen.add(f)
                        nxt.append(f)
                        if len(seen) > limit:
                            raise CapacityError(f"tensor {self.name} has more than {limit} elements")
            frontier = nxt
        return sorted(seen, key=lambda m: (bin(m).count("1"), m))

    def describe(self, mask: int) -> str:
        """Readable form: the maximal generator tuples of an element."""
        pts = self.points(mask)
        maximal = [p for p in pts
                   if not any(q != p and all(self._jleq[i][p[i], q[i]] for i in range(len(p))) for q in pts)]
        if not maximal:
            return "⊥"
        parts = ["⊗".join(self.factors[i].label(self.J[i][a]) for i, a in enumerate(p)) for p in maximal]
        return " ∨ ".join(parts)

    def as_suplattice(self, limit: int = DEFAULT_MAX_ELEMENTS) -> SupLattice:
        return SupLattice.from_closure(self.elements(limit), self.closure, self.describe, name=self.name)


def tensor(M: SupLattice, N: SupLattice, max_grid: int = DEFAULT_MAX_GRID) -> TensorLattice:
    return TensorLattice([M, N], max_grid=max_grid)


def tensor_over_base(M: SupLattice, N: SupLattice, B: SupLattice, ract, lact,
                     max_grid: int = DEFAULT_MAX_GRID) -> TensorLattice:
    """M ⊗_B N; ``ract`` is a table M×B→M and ``lact`` a table B×N→N (ids)."""
    ract = np.asarray(ract, dtype=np.int64)
    lact = np.asarray(lact, dtype=np.int64)
    if ract.shape != (M.n, B.n) or lact.shape != (B.n, N.n):
        raise StructuralError("action tables do not match the lattice sizes")
    return TensorLattice([M, N], [BaseAction(B, ract, lact)], max_grid=max_grid,
                         name=f"{M.name}⊗_{B.name}{N.name}")


def action_witness(M: SupLattice, B: SupLattice, table: np.ndarray, side: str) -> tuple | None:
    """First violation of the unital associative join-preserving action laws.

    ``side`` is "right" for tables M×B→M or "left" for tables B×M→M.
    """
    t = table if side == "right" else table.T  # t[x, b]
    for x in range(M.n):
        if t[x, B.top] != x:
            return ("unit", M.label(x))
    for b in range(B.n):
        if t[M.bottom, b] != M.bottom:
            return ("bottom", B.label(b))
        for c in range(B.n):
            # (x·b)·c = x·(b∧c) for a locale acting by restriction
            lhs = t[t[:, b], c]
            rhs = t[:, B.meet[b, c]]
            bad = np.flatnonzero(lhs != rhs)
            if len(bad):
                return ("associative", M.label(bad[0]), B.label(b), B.label(c))
            bad = np.flatnonzero(t[:, B.join[b, c]] != M.join[t[:, b], t[:, c]])
            if len(bad):
                return ("join-base", M.label(bad[0]), B.label(b), B.label(c))
    for b in range(B.n):
        col = t[:, b]
        bad = np.argwhere(col[M.join] != M.join[col[:, None], col[None, :]])
        if len(bad):
            return ("join-module", M.label(bad[0][0]), M.label(bad[0][1]), B.label(b))
    if t[M.bottom, B.bottom] != M.bottom:
        return ("bottom",)
    bad = np.flatnonzero(t[:, B.bottom] != M.bottom)
    if len(bad):
        return ("zero", M.label(bad[0]))
    return None


class TensorMap:
    """A join-preserving map between tensor lattices, given on generators."""

    def __init__(self, source: TensorLattice, target, gen_image: Callable[[tuple[int, ...]], int], name: str = ""):
        self.source = source
        self.target = target
        self.name = name
        self._img = {}
        for pos in itertools.product(*map(range, source.shape)):
            xs = tuple(source.J[i][a] for i, a in enumerate(pos))
            self._img[source.point_index(pos)] = gen_image(xs)

    def __call__(self, mask: int) -> int:
        t = self.target
        acc = 0 if isinstance(t, TensorLattice) else t.bottom
        m = mask
        if isinstance(t, TensorLattice):
            while m:
                low = m & -m
                acc |= self._img[low.bit_length() - 1]
                m ^= low
            return t.closure(acc) if acc else t.bottom
        while m:
            low = m & -m
            acc = t.join2(acc, self._img[low.bit_length() - 1])
            m ^= low
        return acc


def map_tensor(fs: Sequence[SupMap], source: TensorLattice, target: TensorLattice) -> TensorMap:
    """The map f1⊗...⊗fk : source -> target determined by x1⊗..⊗xk ↦ f1(x1)⊗..⊗fk(xk)."""
    if len(fs) != len(source.factors) or len(fs) != len(target.factors):
        raise StructuralError("map_tensor needs one map per factor")
    for i, f in enumerate(fs):
        if f.source.labels != source.factors[i].labels or f.target.labels != target.factors[i].labels:
            raise StructuralError(f"map {i} does not match tensor factor {i}")
    for a, b in zip(source.links, target.links):
        if (a is None) != (b is None) or (a is not None and a.base.labels != b.base.labels):
            raise StructuralError("tensor bases are incompatible")
    return TensorMap(source, target, lambda xs: target.rect([f(x) for f, x in zip(fs, xs)]),
                     name="⊗".join(f.name or "f" for f in fs))


def tensor_injective(f: TensorMap, limit: int = DEFAULT_MAX_ELEMENTS) -> tuple[bool, tuple | None]:
    """Injectivity by enumeration of the source; witness is a pair of colliding elements."""
    seen: dict[int, int] = {}
    for e in f.source.elements(limit):
        v = f(e)
        if v in seen:
            return False, (f.source.describe(seen[v]), f.source.describe(e))
        seen[v] = e
    return True, None


def pairing(f: Callable[[int], object], g: Callable[[int], object], source: TensorLattice, target) -> TensorMap:
    """[f, g](x⊗y) = f(x) ∧ g(y), computed in the frame ``target``.

    ``target`` is a SupLattice or TensorLattice; f and g send element ids of the
    two factors to target elements.
    """
    if len(source.factors) != 2:
        raise StructuralError("pairing needs a binary tensor")
    return TensorMap(source, target, lambda xs: target.meet2(f(xs[0]), g(xs[1])), name="pairing")


def bimorphism_witness(M: SupLattice, N: SupLattice, P: SupLattice, table: np.ndarray) -> tuple | None:
    """First failure of join preservation in either variable of ``table[x, y]``."""
    for x in range(M.n):
        row = table[x]
        if row[N.bottom] != P.bottom:
            return (M.label(x), N.label(N.bottom))
        bad = np.argwhere(row[N.join] != P.join[row[:, None], row[None, :]])
        if len(bad):
            return (M.label(x), N.labels_of(bad[0]))
    for y in range(N.n):
        col = table[:, y]
        if col[M.bottom] != P.bottom:
            return (M.label(M.bottom), N.label(y))
        bad = np.argwhere(col[M.join] != P.join[col[:, None], col[None, :]])
        if len(bad):
            return (M.labels_of(bad[0]), N.label(y))
    return None


def all_bimorphisms(M: SupLattice, N: SupLattice, P: SupLattice, limit: int = 500_000) -> list[np.ndarray]:
    """Every bimorphism M×N→P, determined by values on join-irreducible pairs."""
    JM, JN = M.join_irreducibles(), N.join_irreducibles()
    cells = [(a, b) for a in JM for b in JN]
    if P.n ** len(cells) > limit:
        raise CapacityError(f"{P.n}^{len(cells)} candidate bimorphisms exceed the limit {limit}")
    below = [M.leq[a][:, None] & N.leq[b][None, :] for a, b in cells]
    ca = np.array([a for a, _ in cells], dtype=np.int64)
    cb = np.array([b for _, b in cells], dtype=np.int64)
    out = []
    for vals in itertools.product(range(P.n), repeat=len(cells)):
        table = np.full((M.n, N.n), P.bottom, dtype=np.int64)
        for c, v in enumerate(vals):
            table = np.where(below[c], P.join[table, v], table)
        if (table[ca, cb] == np.array(vals)).all() and bimorphism_witness(M, N, P, table) is None:
            out.append(table)
    return out


def canonical_pullback_map(T: TensorLattice, point_sets: Sequence[Callable[[int], int]]) -> TensorMap:
    """Map ⊗ of open-set frames into the frame of a pullback space.

    ``point_sets[i](x)`` gives, as a bitmask over pullback points, the points
    whose i-th coordinate lies in the open x of factor i; a pure tensor goes to
    the intersection.
    """
    class _Sets:
        bottom = 0

        @staticmethod
        def join2(a, b):
            return a | b

    def gen(xs):
        m = -1
        for i, x in enumerate(xs):
            m &= point_sets[i](x)
        return m if m != -1 else 0

    return TensorMap(T, _Sets, gen, name="canonical")


def universal_property_witness(M: SupLattice, N: SupLattice, P: SupLattice, limit: int = 500_000) -> tuple | None:
    """Every bimorphism M×N→P factors through M⊗N, and the factorizations are all the sup-maps.

    The induced map is read off generators; it must send each pure tensor to
    the bimorphism value, and the number of bimorphisms must equal the number
    of sup-maps M⊗N→P found by independent enumeration.
    """
    from .suplat import all_supmaps

    T = tensor(M, N)
    bims = all_bimorphisms(M, N, P, limit)
    for k, f in enumerate(bims):
        h = TensorMap(T, P, lambda xs, f=f: int(f[xs[0], xs[1]]))
        for x in range(M.n):
            for y in range(N.n):
                if h(T.pure([x, y])) != f[x, y]:
                    return ("no factorization", k, M.label(x), N.label(y))
    n_sup = len(all_supmaps(T.as_suplattice(), P, limit))
    if n_sup != len(bims):
        return ("count", len(bims), n_sup)
    return None
