"""Involutive based quantales and their axiom packages.

All checks are exhaustive over the carrier and vectorized per row so that
carriers of a few hundred elements stay cheap.  Every failed axiom is reported
with the lexicographically first witness under element-id order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .checks import Check, Outcome, failed, first_index, incident, passed, skipped, verdict
from .errors import UsageError
from .suplat import (SupLattice, SupMap, all_supmaps, distributivity_witness, join_witness, law_witness,
                     meet_witness, rows_preserve_joins)
from .tensor import BaseAction, TensorLattice

PACKAGES = ("involutive", "based", "quantal-frame", "supported", "equivariant", "stable", "reflexive")


@dataclass(eq=False)
class BasedStructure:
    """Locale B acting by restriction: ``lres[a, x]`` is a◁x and ``rres[x, a]`` is x▷a."""

    base: SupLattice
    lres: np.ndarray
    rres: np.ndarray


@dataclass(eq=False)
class Quantale:
    carrier: SupLattice
    mult: np.ndarray
    inv: np.ndarray | None = None
    unit: int | None = None
    based: BasedStructure | None = None
    spp: np.ndarray | None = None
    upsilon: np.ndarray | None = None
    name: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mult = np.asarray(self.mult, dtype=np.int64)
        if self.inv is not None:
            self.inv = np.asarray(self.inv, dtype=np.int64)
        if self.spp is not None:
            self.spp = np.asarray(self.spp, dtype=np.int64)
        if self.upsilon is not None:
            self.upsilon = np.asarray(self.upsilon, dtype=np.int64)
        self._reduced = None

    @property
    def n(self) -> int:
        return self.carrier.n

    @property
    def L(self) -> SupLattice:
        return self.carrier

    @property
    def B(self) -> SupLattice:
        if self.based is None:
            raise UsageError(f"quantale {self.name} has no base locale")
        return self.based.base

    @property
    def one(self) -> int:
        return self.carrier.top

    def __getitem__(self, label: str) -> int:
        return self.carrier[label]

    def label(self, x: int) -> str:
        return self.carrier.label(x)

    def mul(self, x: int, y: int) -> int:
        return int(self.mult[x, y])

    def star(self, x: int) -> int:
        if self.inv is None:
            raise UsageError(f"quantale {self.name} has no involution")
        return int(self.inv[x])

    def lres(self, a: int, x: int) -> int:
        return int(self.based.lres[a, x])

    def rres(self, x: int, a: int) -> int:
        return int(self.based.rres[x, a])

    def replace(self, **kw) -> "Quantale":
        data = dict(carrier=self.carrier, mult=self.mult, inv=self.inv, unit=self.unit, based=self.based,
                    spp=self.spp, upsilon=self.upsilon, name=self.name, notes=dict(self.notes))
        data.update(kw)
        return Quantale(**data)

    # -- reduced multiplication ------------------------------------------
    def reduced_tensor(self) -> TensorLattice:
        """Q ⊗_B Q with B acting by x▷b on the left factor and b◁y on the right."""
        if self._reduced is None:
            links = [BaseAction(self.B, self.based.rres, self.based.lres)] if self.based is not None else None
            self._reduced = TensorLattice([self.carrier, self.carrier], links, name=f"{self.name}⊗_B{self.name}")
        return self._reduced

    def mu_star(self, a: int) -> int:
        """The reduced comultiplication μ*(a) = ⋁{x⊗y : xy <= a} as a tensor element."""
        T = self.reduced_tensor()
        J = np.array(T.J[0], dtype=np.int64)
        K = np.array(T.J[1], dtype=np.int64)
        prod = self.mult[np.ix_(J, K)]
        return T.from_array(self.carrier.leq[prod, a])


def join_many(L: SupLattice, ids: np.ndarray) -> int:
    """Join of a (possibly large) array of element ids."""
    ids = np.unique(np.asarray(ids, dtype=np.int64))
    if len(ids) == 0:
        return L.bottom
    return L.join_all(ids)


def _lab(L: SupLattice, *ids) -> tuple:
    return tuple(L.label(i) for i in ids)


# -- axiom checks -------------------------------------------------------------

def _assoc(Q: Quantale, bilinear: bool = False) -> tuple | None:
    M = Q.mult
    if bilinear:
        J, full = np.array(Q.L.join_irreducibles()), np.arange(Q.n)
        return law_witness(lambda x, y, z: M[M[x, y], z] != M[x, M[y, z]], [J, J, J], [full, full, full],
                           [Q.label] * 3)
    for x in range(Q.n):
        hit = first_index(M[M[x]] != M[x][M])
        if hit is not None:
            return _lab(Q.L, x, *hit)
    return None


def _bilinear(Q: Quantale) -> tuple[tuple | None, tuple | None]:
    L, M = Q.L, Q.mult
    if rows_preserve_joins(L, L, M) and rows_preserve_joins(L, L, M.T):
        return None, None
    left = right = None
    for z in range(Q.n):
        col = M[:, z]
        if left is None:
            if col[L.bottom] != L.bottom:
                left = ((), L.label(z))
            else:
                hit = first_index(col[L.join] != L.join[col[:, None], col[None, :]])
                if hit is not None:
                    left = (_lab(L, *hit), L.label(z))
        row = M[z]
        if right is None:
            if row[L.bottom] != L.bottom:
                right = (L.label(z), ())
            else:
                hit = first_index(row[L.join] != L.join[row[:, None], row[None, :]])
                if hit is not None:
                    right = (L.label(z), _lab(L, *hit))
        if left is not None and right is not None:
            break
    return left, right


def check_quantale_core(Q: Quantale) -> list[Check]:
    left, right = _bilinear(Q)
    out = [verdict("quantale.associative", _assoc(Q, left is None and right is None))]
    out.append(verdict("quantale.joins-left", left))
    out.append(verdict("quantale.joins-right", right))
    if Q.unit is not None:
        e = Q.unit
        bad = np.flatnonzero((Q.mult[e] != np.arange(Q.n)) | (Q.mult[:, e] != np.arange(Q.n)))
        out.append(verdict("quantale.unit", None if len(bad) == 0 else (Q.label(bad[0]),)))
    return out


def check_involutive(Q: Quantale) -> list[Check]:
    if Q.inv is None:
        raise UsageError("the involutive package needs an involution")
    L, M, s = Q.L, Q.mult, Q.inv
    out = [verdict("involutive.joins", join_witness(SupMap(L, L, s)))]
    bad = np.flatnonzero(s[s] != np.arange(Q.n))
    out.append(verdict("involutive.double", None if len(bad) == 0 else (Q.label(bad[0]),)))
    hit = first_index(s[M] != M[s[None, :], s[:, None]])
    out.append(verdict("involutive.anti", None if hit is None else _lab(L, *hit)))
    if Q.based is not None:
        B, lr, rr = Q.B, Q.based.lres, Q.based.rres
        w = None
        for a in range(B.n):
            for b in range(B.n):
                lhs = s[lr[a][rr[:, b]]]
                rhs = lr[b][rr[s, a]]
                bad = np.flatnonzero(lhs != rhs)
                if len(bad):
                    w = (B.label(a), Q.label(bad[0]), B.label(b))
                    break
            if w:
                break
        out.append(verdict("involutive.base", w))
    return out


def check_based(Q: Quantale) -> list[Check]:
    if Q.based is None:
        raise UsageError("the based package needs base actions")
    L, B, M = Q.L, Q.B, Q.mult
    lr, rr = Q.based.lres, Q.based.rres
    out = []
    for nm, t in (("left", lr.T), ("right", rr)):  # t[x, a]
        w = None
        if (t[:, B.top] != np.arange(Q.n)).any():
            w = ("unit", Q.label(np.flatnonzero(t[:, B.top] != np.arange(Q.n))[0]))
        for a in range(B.n):
            if w:
                break
            col = t[:, a]
            if col[L.bottom] != L.bottom:
                w = ("zero", B.label(a))
                break
            hit = first_index(col[L.join] != L.join[col[:, None], col[None, :]])
            if hit is not None:
                w = ("join-module", B.label(a)) + _lab(L, *hit)
                break
            for b in range(B.n):
                bad = np.flatnonzero(t[col, b] != t[:, B.meet[a, b]])
                if len(bad):
                    w = ("associative", B.label(a), B.label(b), Q.label(bad[0]))
                    break
                bad = np.flatnonzero(t[:, B.join[a, b]] != L.join[col, t[:, b]])
                if len(bad):
                    w = ("join-base", B.label(a), B.label(b), Q.label(bad[0]))
                    break
        if not w:
            bad = np.flatnonzero(t[:, B.bottom] != L.bottom)
            if len(bad):
                w = ("bottom-base", Q.label(bad[0]))
        out.append(verdict(f"based.{nm}-action", w))
    w = None
    for a in range(B.n):
        for b in range(B.n):
            bad = np.flatnonzero(rr[lr[a], b] != lr[a][rr[:, b]])
            if len(bad):
                w = (B.label(a), Q.label(bad[0]), B.label(b))
                break
        if w:
            break
    out.append(verdict("based.bimodule", w))
    w1 = w2 = w3 = None
    for a in range(B.n):
        if w1 is None:
            hit = first_index(M[lr[a]] != lr[a][M])
            if hit is not None:
                w1 = (B.label(a),) + _lab(L, *hit)
        if w2 is None:
            hit = first_index(M[rr[:, a]] != M[:, lr[a]])
            if hit is not None:
                w2 = (B.label(a),) + _lab(L, *hit)
        if w3 is None:
            hit = first_index(rr[M, a] != M[:, rr[:, a]])
            if hit is not None:
                w3 = (B.label(a),) + _lab(L, *hit)
    out.append(verdict("based.left-mult", w1))
    out.append(verdict("based.middle-mult", w2))
    out.append(verdict("based.right-mult", w3))
    return out


def check_quantal_frame(Q: Quantale) -> list[Check]:
    L = Q.L
    out = [verdict("quantal-frame.distributive", distributivity_witness(L))]
    if Q.based is None:
        raise UsageError("the quantal-frame package needs base actions")
    lr, rr, B = Q.based.lres, Q.based.rres, Q.B
    w1 = w2 = None
    for a in range(B.n):
        if w1 is None:
            hit = first_index(L.meet[lr[a]] != lr[a][L.meet])
            if hit is not None:
                w1 = (B.label(a),) + _lab(L, *hit)
        if w2 is None:
            hit = first_index(L.meet[:, rr[:, a]] != rr[L.meet, a])
            if hit is not None:
                w2 = (B.label(a),) + _lab(L, *hit)
    out.append(verdict("quantal-frame.left", w1))
    out.append(verdict("quantal-frame.right", w2))
    return out


def check_supported(Q: Quantale) -> list[Check]:
    if Q.spp is None:
        raise UsageError("the supported package needs a support map")
    if Q.inv is None or Q.based is None:
        raise UsageError("the supported package needs an involution and base actions")
    L, B, M, s, sp, lr = Q.L, Q.B, Q.mult, Q.inv, Q.spp, Q.based.lres
    out = [verdict("supported.sup-map", join_witness(SupMap(L, B, sp)))]
    out.append(verdict("supported.top", None if sp[L.top] == B.top else (Q.label(L.top),)))
    xxs = M[np.arange(Q.n), s]
    lhs = lr[sp]  # [x, y] = ς(x)◁y
    rhs = M[xxs]  # [x, y] = xx*y
    hit = first_index(~L.leq[lhs, rhs])
    out.append(verdict("supported.below-xx*y", None if hit is None else _lab(L, *hit)))
    bad = np.flatnonzero(lr[sp, np.arange(Q.n)] != np.arange(Q.n))
    out.append(verdict("supported.restricts", None if len(bad) == 0 else (Q.label(bad[0]),)))
    return out


def check_equivariant(Q: Quantale) -> list[Check]:
    if Q.spp is None:
        raise UsageError("the equivariant package needs a support map")
    B, sp, lr = Q.B, Q.spp, Q.based.lres
    hit = first_index(sp[lr] != B.meet[:, sp])
    return [verdict("equivariant", None if hit is None else (B.label(hit[0]), Q.label(hit[1])))]


def stability_checks(Q: Quantale) -> list[Check]:
    """The three stability formulations, each checked independently."""
    if Q.spp is None:
        raise UsageError("the stable package needs a support map")
    L, B, M, sp, rr = Q.L, Q.B, Q.mult, Q.spp, Q.based.rres
    hit = first_index(~B.leq[sp[M], sp[:, None]])
    c1 = verdict("stable.product", None if hit is None else _lab(L, *hit))
    bad = np.flatnonzero(~B.leq[sp[M[:, L.top]], sp])
    c2 = verdict("stable.top", None if len(bad) == 0 else (Q.label(bad[0]),))
    hit = first_index(sp[M] != sp[rr[:, sp]])
    c3 = verdict("stable.restrict", None if hit is None else _lab(L, *hit))
    return [c1, c2, c3]


def check_reflexive(Q: Quantale) -> list[Check]:
    if Q.upsilon is None:
        raise UsageError("the reflexive package needs υ")
    L, B, up = Q.L, Q.B, Q.upsilon
    f = SupMap(L, B, up)
    out = [verdict("reflexive.joins", join_witness(f)), verdict("reflexive.meets", meet_witness(f))]
    lr, rr = Q.based.lres, Q.based.rres
    bad = [a for a in range(B.n) if up[lr[a, L.top]] != a or up[rr[L.top, a]] != a]
    out.append(verdict("reflexive.unit", None if not bad else (B.label(bad[0]),)))
    return out


_RUNNERS = {"involutive": check_involutive, "based": check_based, "quantal-frame": check_quantal_frame,
            "supported": check_supported, "equivariant": check_equivariant, "stable": stability_checks,
            "reflexive": check_reflexive}


def validate_quantale(Q: Quantale, packages: Iterable[str] = PACKAGES) -> Outcome:
    packages = list(packages)
    unknown = [p for p in packages if p not in _RUNNERS]
    if unknown:
        raise UsageError(f"unknown axiom package {unknown[0]!r}")
    out = Outcome(Q.name)
    out.extend(check_quantale_core(Q))
    for p in PACKAGES:
        if p in packages:
            out.extend(_RUNNERS[p](Q))
    return out


# -- derived sets -------------------------------------------------------------

def right_sided(Q: Quantale) -> list[int]:
    top = Q.one
    return [a for a in range(Q.n) if Q.L.leq[Q.mult[a, top], a]]


def rs_isomorphism(Q: Quantale) -> Check:
    """x ↦ x◁1 is an order isomorphism B → RS(Q) with inverse ς."""
    B, L = Q.B, Q.L
    rs = set(right_sided(Q))
    fwd = [Q.lres(a, Q.one) for a in range(B.n)]
    for a, v in enumerate(fwd):
        if v not in rs:
            return failed("rs-iso.image", (B.label(a), Q.label(v)))
        if Q.spp[v] != a:
            return failed("rs-iso.inverse", (B.label(a), Q.label(v)))
    if set(fwd) != rs:
        return failed("rs-iso.onto", (Q.label(min(rs - set(fwd))),))
    for a in range(B.n):
        for b in range(B.n):
            if B.leq[a, b] != L.leq[fwd[a], fwd[b]]:
                return failed("rs-iso.order", (B.label(a), B.label(b)))
    return passed("rs-iso")


def partial_units(Q: Quantale) -> list[int]:
    """{a : a*a <= e and aa* <= e}."""
    if Q.unit is None:
        raise UsageError(f"quantale {Q.name} has no unit")
    e, s, M, leq = Q.unit, Q.inv, Q.mult, Q.L.leq
    idx = np.arange(Q.n)
    ok = leq[M[s, idx], e] & leq[M[idx, s], e]
    return [int(a) for a in np.flatnonzero(ok)]


def partial_units_cover(Q: Quantale) -> Check:
    I = partial_units(Q)
    j = Q.L.join_all(I)
    return passed("partial-units.cover") if j == Q.one else failed("partial-units.cover", (Q.label(j),))


def check_unit_laws(Q: Quantale) -> Check:
    """⋁{υ(x)◁y : xy <= a} = a for every a."""
    L, M, up, lr = Q.L, Q.mult, Q.upsilon, Q.based.lres
    vals = lr[up[:, None], np.arange(Q.n)[None, :]]  # [x, y] = υ(x)◁y
    for a in range(Q.n):
        sel = L.leq[M, a]
        got = join_many(L, vals[sel])
        if got != a:
            return failed("unit-laws", (Q.label(a), Q.label(got)))
    return passed("unit-laws")


def check_inverse_law(Q: Quantale) -> Check:
    """υ(a)◁1 = ⋁{x : xx* <= a} for every a."""
    L, M, s, up = Q.L, Q.mult, Q.inv, Q.upsilon
    xxs = M[np.arange(Q.n), s]
    for a in range(Q.n):
        lhs = Q.lres(int(up[a]), Q.one)
        rhs = join_many(L, np.flatnonzero(L.leq[xxs, a]))
        if lhs != rhs:
            return failed("inverse-law", (Q.label(a), Q.label(lhs), Q.label(rhs)))
    return passed("inverse-law")


def check_multiplicative(Q: Quantale) -> Check:
    """μ* preserves the empty join and all binary joins."""
    T = Q.reduced_tensor()
    ms = [Q.mu_star(a) for a in range(Q.n)]
    for a in range(Q.n):
        if not T.is_closed(ms[a]):
            return failed("multiplicative.well-defined", (Q.label(a),), "reduced multiplication does not respect the base")
    if ms[Q.L.bottom] != T.bottom:
        return failed("multiplicative", ())
    J = Q.L.join
    for a in range(Q.n):
        for b in range(a + 1, Q.n):
            target = ms[J[a, b]]
            u = ms[a] | ms[b]
            if u != target and T.closure(u) != target:
                return failed("multiplicative", (Q.label(a), Q.label(b)))
    return passed("multiplicative")


def iota_checks(Q: Quantale) -> list[Check]:
    """ι(a) = a◁e is an order isomorphism B → ↓e turning actions into products."""
    B, L, e = Q.B, Q.L, Q.unit
    iota = [Q.lres(a, e) for a in range(B.n)]
    down = set(int(x) for x in np.flatnonzero(L.leq[:, e]))
    out = []
    ok = set(iota) == down and len(set(iota)) == B.n and all(
        B.leq[a, b] == L.leq[iota[a], iota[b]] for a in range(B.n) for b in range(B.n))
    out.append(passed("iota.iso") if ok else failed("iota.iso", tuple(Q.label(v) for v in iota)))
    w = None
    for a in range(B.n):
        bad = np.flatnonzero((Q.based.lres[a] != Q.mult[iota[a]]) | (Q.based.rres[:, a] != Q.mult[:, iota[a]]))
        if len(bad):
            w = (B.label(a), Q.label(bad[0]))
            break
    out.append(verdict("iota.actions", w))
    return out


def find_unit(Q: Quantale) -> int | None:
    idx = np.arange(Q.n)
    for e in range(Q.n):
        if (Q.mult[e] == idx).all() and (Q.mult[:, e] == idx).all():
            return e
    return None


def supports_search(Q: Quantale, max_size: int = 8) -> list[np.ndarray] | None:
    """Every sup-map Q→B passing the supported and equivariant packages (small Q only)."""
    if Q.n > max_size:
        return None
    out = []
    for table in all_supmaps(Q.L, Q.B):
        cand = Q.replace(spp=table)
        try:
            checks = check_supported(cand) + check_equivariant(cand)
        except UsageError:
            return None
        if all(c.passed for c in checks):
            out.append(table)
    return out


@dataclass
class Classification:
    groupoid_quantale: bool
    inverse_quantal_frame: bool
    outcome: Outcome
    failing: str | None = None

    def as_dict(self) -> dict:
        return {"groupoid-quantale": self.groupoid_quantale, "inverse-quantal-frame": self.inverse_quantal_frame,
                "failing": self.failing}


def classify(Q: Quantale) -> Classification:
    """Groupoid quantale and inverse quantal frame verdicts with the first failing axiom."""
    out = validate_quantale(Q, PACKAGES)
    out.add(check_multiplicative(Q))
    out.add(check_unit_laws(Q))
    out.add(check_inverse_law(Q))
    first = out.first_failure()
    gq = first is None
    if Q.unit is None:
        out.add(skipped("inverse-quantal-frame", "no designated unit"))
        iqf = False
        fail_iqf = "no designated unit"
    else:
        base_ok = all(c.ok for c in out if not c.name.startswith(("multiplicative", "unit-laws")))
        iqf = base_ok
        fail_iqf = None if base_ok else out.first_failure().name
        if base_ok:
            # unital + inverse law should force multiplicativity and unit laws
            for name in ("multiplicative", "unit-laws"):
                c = out[name]
                if not c.passed:
                    out.add(incident(f"iqf-forces-{name}", c.witness))
            out.add(partial_units_cover(Q))
            out.extend(iota_checks(Q))
            iqf = all(c.ok for c in out)
            if not iqf:
                fail_iqf = out.first_failure().name
    failing = None if gq else first.name
    if gq and not iqf:
        failing = fail_iqf
    return Classification(gq, iqf, out, failing)


# -- small builders --------------------------------------------------------------

def one_element() -> Quantale:
    L = SupLattice(["0"], np.ones((1, 1), bool), name="1")
    B = L
    z = np.zeros((1, 1), dtype=np.int64)
    return Quantale(L, z, inv=np.zeros(1, np.int64), unit=None, based=BasedStructure(B, z, z),
                    spp=np.zeros(1, np.int64), upsilon=np.zeros(1, np.int64), name="one")
