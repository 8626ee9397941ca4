"""Verdict records produced by every checker.

A checker never raises for a failed axiom; it returns a :class:`Check` with a
minimal witness instead.  Exceptions are reserved for misuse (missing data,
capacity guards, malformed structures).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

import numpy as np

PASS = "pass"
FAIL = "fail"
INCIDENT = "incident"
SKIPPED = "skipped"


@dataclass(frozen=True)
class Check:
    name: str
    status: str = PASS
    witness: Any = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def ok(self) -> bool:
        """True for pass and skipped verdicts."""
        return self.status in (PASS, SKIPPED)

    def as_dict(self) -> dict:
        out = {"name": self.name, "status": self.status}
        if self.witness is not None:
            out["witness"] = _plain(self.witness)
        if self.detail:
            out["detail"] = self.detail
        return out


def _plain(w):
    if isinstance(w, (tuple, list)):
        return [_plain(x) for x in w]
    if isinstance(w, dict):
        return {str(k): _plain(v) for k, v in w.items()}
    if isinstance(w, (np.integer,)):
        return int(w)
    if isinstance(w, (str, int, float, bool)) or w is None:
        return w
    return str(w)


def passed(name: str, detail: str = "") -> Check:
    return Check(name, PASS, None, detail)


def failed(name: str, witness: Any = None, detail: str = "") -> Check:
    return Check(name, FAIL, witness, detail)


def incident(name: str, witness: Any = None, detail: str = "") -> Check:
    return Check(name, INCIDENT, witness, detail)


def skipped(name: str, reason: str) -> Check:
    return Check(name, SKIPPED, None, reason)


def verdict(name: str, witness: Any, detail: str = "") -> Check:
    """Pass when ``witness`` is None, fail with it otherwise."""
    if witness is None:
        return passed(name, detail)
    return failed(name, witness, detail)


@dataclass
class Outcome:
    """An ordered collection of checks about one subject."""

    subject: str = ""
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks: Iterable[Check], prefix: str = "") -> None:
        for c in checks:
            if prefix:
                c = Check(f"{prefix}.{c.name}", c.status, c.witness, c.detail)
            self.checks.append(c)

    def __iter__(self) -> Iterator[Check]:
        return iter(self.checks)

    def __len__(self) -> int:
        return len(self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status == FAIL]

    @property
    def incidents(self) -> list[Check]:
        return [c for c in self.checks if c.status == INCIDENT]

    def first_failure(self) -> Check | None:
        for c in self.checks:
            if not c.ok:
                return c
        return None

    def summary(self) -> str:
        bad = [c for c in self.checks if not c.ok]
        if not bad:
            return f"{self.subject}: {len(self.checks)} checks pass"
        return f"{self.subject}: " + "; ".join(f"{c.name}={c.status}{'' if c.witness is None else ' ' + repr(c.witness)}" for c in bad)


def first_index(mask: np.ndarray) -> tuple | None:
    """Lexicographically first True position of a boolean array, or None."""
    if not mask.any():
        return None
    hits = np.argwhere(mask)
    return tuple(int(v) for v in hits[0])
