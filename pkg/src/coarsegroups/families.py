"""Generating families with a forced long word, and finite condition checkers.

``family_free`` and ``family_abelian_z`` build generating sets ``S(g, h, R)``
that contain one of ``g, h`` while the other has word length at least ``R``.
Such sets come from a delayed generation trick: every generator except ``x``
is prefixed by a large power of ``x``, so short words cannot reach ``h``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .groups import Element, FreeAbelian, FreeGroup, Group, GroupError, conjugate
from .metric import AtLeast, GeneratingSet, WordMetric


@dataclass(frozen=True)
class FamilyRequest:
    g: Element
    h: Element
    R: int

    def __post_init__(self):
        if self.g.group != self.h.group:
            raise GroupError("g and h live in different groups")
        if self.g == self.h or self.g == self.h.inverse():
            raise GroupError("request needs g != h^(+-1)")
        if self.R < 1:
            raise ValueError("R must be positive")

    def to_dict(self):
        return {"g": str(self.g), "h": str(self.h), "R": self.R}


# ---------------------------------------------------------------------------
# free groups


def _cyclic_split(w: tuple) -> tuple[tuple, tuple]:
    """``w = u c u^-1`` with ``c`` cyclically reduced."""
    i = 0
    while 2 * i + 1 < len(w) and w[i] == -w[len(w) - 1 - i]:
        i += 1
    return w[:i], w[i : len(w) - i]


def is_power(h: Element, g: Element) -> bool:
    """Whether ``h = g^k`` for some integer ``k`` (free or free abelian group)."""
    G = g.group
    if h.is_identity():
        return True
    if g.is_identity():
        return False
    if isinstance(G, FreeAbelian):
        ks = {hv // gv for hv, gv in zip(h.payload, g.payload) if gv and hv % gv == 0}
        return any(g ** k == h for k in ks)
    if isinstance(G, FreeGroup):
        u, c = _cyclic_split(g.payload)
        extra = len(h.payload) - 2 * len(u)
        if extra <= 0 or extra % len(c):
            return False
        k = extra // len(c)
        return g ** k == h or g ** (-k) == h
    raise GroupError(f"power test not available for {G.descriptor()}")


def _free_basis(G: FreeGroup, S0: GeneratingSet | None) -> list[Element]:
    if S0 is None:
        return G.generators()
    basis: list[Element] = []
    for s in S0.elements:
        if s.inverse() not in basis and s not in basis:
            basis.append(s)
    return basis


@dataclass(frozen=True)
class Family:
    """A constructed generating set with the request it serves."""

    S: GeneratingSet
    request: FamilyRequest
    P: int
    construction: str

    def to_dict(self):
        return {
            "request": self.request.to_dict(),
            "P": self.P,
            "construction": self.construction,
            "generators": [str(s) for s in self.S.elements],
        }


def _free_candidate(x: Element, others: Sequence[Element], P: int, sandwich: bool) -> tuple[Element, ...]:
    out = [x]
    for j, s in enumerate(others, start=1):
        k = x ** ((P + 1) ** j)
        out.append(k * s * k if sandwich else k * s)
    return tuple(out)


def family_free(
    g: Element,
    h: Element,
    R: int,
    S0: GeneratingSet | None = None,
    *,
    fallback: bool = True,
    cap: int | None = None,
) -> Family:
    """``S = {x} + {x^((P+1)^j) s_j}`` over the basis letters other than ``x``.

    The plain formula leaves conjugates ``s^-1 x s`` at length 3 whatever
    ``P`` is.  With ``fallback`` set, a plain candidate that misses the
    Property is replaced by ``x^((P+1)^j) s_j x^((P+1)^j)``.
    """
    G = g.group
    if not isinstance(G, FreeGroup) or G.rank < 2:
        raise GroupError("family_free needs a free group of rank >= 2")
    FamilyRequest(g, h, R)
    if h.is_identity() or is_power(h, g):
        g, h = h, g
        if h.is_identity() or is_power(h, g):
            raise GroupError("no usable orientation of the request")
    req = FamilyRequest(g, h, R)
    basis = _free_basis(G, S0)
    x = next(s for s in basis if not is_power(h, s)) if g.is_identity() else g
    P = max(R, len(h.payload))
    others = [s for s in basis if s != x]
    S = GeneratingSet(G, _free_candidate(x, others, P, False), True, f"free-family(P={P})")
    if not fallback or verify_property(S, req, cap=cap).passed:
        return Family(S, req, P, "formula")
    S = GeneratingSet(G, _free_candidate(x, others, P, True), True, f"free-family-sandwich(P={P})")
    return Family(S, req, P, "sandwich")


# ---------------------------------------------------------------------------
# the integers


def family_parameter_z(g: int, h: int, R: int) -> int:
    if g == 0:
        return 1 + max(R, abs(h))
    P = 1 + max(R, abs(h), abs(g))
    while math.gcd(P, g) != 1:
        P += 1
    return P


def family_abelian_z(g: Element, h: Element, R: int) -> Family:
    """``S = {g, P^2, P^3 + 1}`` on ``Z`` (``g`` dropped when zero), after
    swapping so that ``h`` is non-zero and not a multiple of ``g``."""
    G = g.group
    if not (isinstance(G, FreeAbelian) and G.rank == 1):
        raise GroupError("family_abelian_z needs the group z")
    FamilyRequest(g, h, R)
    a, b = g.payload[0], h.payload[0]
    if b == 0 or (a != 0 and b % a == 0):
        a, b = b, a
    P = family_parameter_z(a, b, R)
    elems = [G.element((v,)) for v in (a, P * P, P ** 3 + 1) if v != 0]
    S = GeneratingSet(G, tuple(elems), True, f"z-family(P={P})")
    return Family(S, FamilyRequest(G.element((a,)), G.element((b,)), R), P, "formula")


# ---------------------------------------------------------------------------
# checking the Property


@dataclass
class PropertyResult:
    passed: bool
    member: str | None
    lengths: dict
    request: FamilyRequest

    def to_dict(self):
        return {
            "passed": self.passed,
            "member": self.member,
            "request": self.request.to_dict(),
            "lengths": {k: (str(v) if isinstance(v, AtLeast) else v) for k, v in self.lengths.items()},
        }


def _in_set(x: Element, S: GeneratingSet) -> bool:
    # the identity is within distance 1 of everything the Property needs
    return x.is_identity() or x in S.elements


def verify_property(
    S: GeneratingSet,
    req: FamilyRequest,
    r_max: int | None = None,
    metric: WordMetric | None = None,
    cap: int | None = None,
) -> PropertyResult:
    """Pass iff ``g in S`` and ``||h||_S >= R`` or the same with roles swapped.

    Word lengths are searched up to ``R - 1``; anything beyond counts as a
    certified ``>= R``.
    """
    r_max = req.R if r_max is None else r_max
    if r_max < req.R:
        raise ValueError("r_max must be at least R")
    metric = metric or WordMetric(S, cap=cap)
    lengths = {}
    for name, member, other in (("g", req.g, req.h), ("h", req.h, req.g)):
        if _in_set(member, S):
            d = metric.length(other, req.R - 1)
            lengths["h" if name == "g" else "g"] = d
            if d >= req.R:
                return PropertyResult(True, name, lengths, req)
    return PropertyResult(False, None, lengths, req)


# ---------------------------------------------------------------------------
# condition reports


@dataclass
class ConditionResult:
    cid: str
    passed: bool
    witness: tuple[Element, ...] = ()
    description: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        wit = "" if self.passed else "  witness: " + ", ".join(map(str, self.witness))
        return f"[{status}] {self.cid}: {self.description}{wit}"

    def to_dict(self):
        return {
            "id": self.cid,
            "passed": self.passed,
            "description": self.description,
            "witness": [str(w) for w in self.witness],
        }


@dataclass
class ConditionReport:
    results: list[ConditionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, cid: str) -> ConditionResult:
        for r in self.results:
            if r.cid == cid:
                return r
        raise KeyError(cid)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]

    def to_dict(self):
        return {"passed": self.passed, "conditions": [r.to_dict() for r in self.results]}


def _first(pairs: Iterable[tuple], pred) -> tuple | None:
    for t in pairs:
        if pred(*t):
            return t
    return None


def _distinct_pairs(elems: Sequence[Element]):
    """Ordered pairs ``(x, y)`` with ``x != y^(+-1)``."""
    for x, y in itertools.product(elems, repeat=2):
        if x != y and x != y.inverse():
            yield x, y


def _two_independent(elems: Sequence[Element]) -> tuple | None:
    return next(_distinct_pairs(elems), None)


def _sorted_unique(elems: Iterable[Element]) -> list[Element]:
    return sorted(set(elems))


def check_theorem_b_conditions(group: Group, S0: GeneratingSet) -> ConditionReport:
    """Five finite conditions on a symmetric set, each checked exhaustively."""
    if S0.group != group:
        raise GroupError("generating set is not in the group")
    elems = _sorted_unique(list(S0.elements) + [s.inverse() for s in S0.elements])
    members = set(elems)
    e = group.identity()
    report = ConditionReport()

    w = _first(itertools.product(elems, repeat=2), lambda a, b: a * b in members)
    report.results.append(
        ConditionResult("1", w is None, () if w is None else (w[0], w[1], w[0] * w[1]), "no s1*s2 = s3")
    )
    w = _first(_distinct_pairs(elems), lambda a, b: a * a * b * b == e)
    report.results.append(ConditionResult("2", w is None, w or (), "no s1^2 s2^2 = e"))
    w = _first(_distinct_pairs(elems), lambda a, b: conjugate(a, b) == a.inverse())
    report.results.append(ConditionResult("3", w is None, w or (), "no s1^s2 = s1^-1"))
    w = _first(_distinct_pairs(elems), lambda a, b: conjugate(a, b) == a)
    report.results.append(ConditionResult("4", w is None, w or (), "no s1^s2 = s1"))
    w = _two_independent(elems)
    report.results.append(
        ConditionResult("5", w is not None, w or tuple(elems), "two distinct non-inverse elements")
    )
    return report


def check_semishared_conditions(group_H: Group, images: Sequence[Element]) -> ConditionReport:
    """Conditions (a)-(f) on a list of images, evaluated literally in ``group_H``."""
    for x in images:
        if x.group != group_H:
            raise GroupError(f"{x} is not in {group_H.descriptor()}")
    elems = _sorted_unique(images)
    e = group_H.identity()
    report = ConditionReport()
    w = next(((x,) for x in elems if x * x == e), None)
    report.results.append(ConditionResult("a", w is None, w or (), "no x^2 = e"))
    w = _first(_distinct_pairs(elems), lambda x, y: x * x == y * y)
    report.results.append(ConditionResult("b", w is None, w or (), "no x^2 = y^2"))
    w = _first(_distinct_pairs(elems), lambda x, y: (x * y) ** 2 == e)
    report.results.append(ConditionResult("c", w is None, w or (), "no (xy)^2 = e"))
    w = _first(_distinct_pairs(elems), lambda x, y: conjugate(x, y) == x)
    report.results.append(ConditionResult("d", w is None, w or (), "no x^y = x"))
    w = _first(_distinct_pairs(elems), lambda x, y: conjugate(x, y) == x.inverse())
    report.results.append(ConditionResult("e", w is None, w or (), "no x^y = x^-1"))
    w = _two_independent(elems)
    report.results.append(
        ConditionResult("f", w is not None, w or tuple(elems), "two distinct non-inverse elements")
    )
    return report


# ---------------------------------------------------------------------------
# torsion


def totient(n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


@dataclass(frozen=True)
class TorsionVerdict:
    n: int
    totient: int
    admissible: bool

    def to_dict(self):
        return {"n": self.n, "totient": self.totient, "admissible": self.admissible}


def torsion_obstruction(n: int) -> TorsionVerdict:
    """An element of order ``n`` is compatible with the Property iff
    ``totient(n) <= 2``."""
    t = totient(n)
    return TorsionVerdict(n, t, t <= 2)
