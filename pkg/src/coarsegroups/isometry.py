"""Isometries of finite Cayley graphs, shared isometry groups, refutation of
non-translation candidates, sign homomorphy and the sixteen relator cases."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .coarse import CoarseMap, ElementMap, compose, translation
from .families import Family, FamilyRequest, family_abelian_z, family_free
from .groups import Element, FreeAbelian, FreeGroup, Group, GroupError
from .metric import AtLeast, GeneratingSet, WordMetric

DEFAULT_ORDER_BOUND = 24
DEFAULT_FAMILY_ORDER_BOUND = 16


class OrderBoundExceeded(GroupError):
    pass


def _check_finite(group: Group, bound: int) -> list[Element]:
    if not group.is_finite:
        raise GroupError(f"{group.descriptor()} is infinite")
    if group.order > bound:
        raise OrderBoundExceeded(f"order {group.order} exceeds bound {bound}")
    return group.elements()


def cycle_notation(perm: Sequence[int]) -> str:
    """One-line cycle notation on 0-based indices, fixed points omitted."""
    seen, parts = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(str(i))
            i = perm[i]
        parts.append("(" + " ".join(cyc) + ")")
    return "".join(parts) or "()"


@dataclass(frozen=True)
class FiniteIsometry:
    """Permutation of the sorted element list: element ``i`` goes to ``perm[i]``."""

    perm: tuple[int, ...]

    def __call__(self, i: int) -> int:
        return self.perm[i]

    def compose(self, other: "FiniteIsometry") -> "FiniteIsometry":
        """``self`` after ``other``."""
        return FiniteIsometry(tuple(self.perm[j] for j in other.perm))

    def inverse(self) -> "FiniteIsometry":
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return FiniteIsometry(tuple(inv))

    def cycles(self) -> str:
        return cycle_notation(self.perm)


def length_table(elements: Sequence[Element], S: GeneratingSet) -> dict[Element, int]:
    metric = WordMetric(S)
    return {g: metric.exact_length(g) for g in elements}


def distance_matrix(elements: Sequence[Element], lengths: dict[Element, int]) -> list[list[int]]:
    return [[lengths[x.inverse() * y] for y in elements] for x in elements]


def _stabilizer(n: int, colour: Sequence[Sequence]) -> list[tuple[int, ...]]:
    """All permutations fixing 0 that preserve the pair colouring ``colour``.

    Vertices are pruned by their colour profile first, then matched by
    backtracking in order of increasing distance from vertex 0.
    """
    profile = [tuple(sorted(colour[v])) for v in range(n)]
    order = sorted(range(n), key=lambda v: (colour[0][v], v))
    out: list[tuple[int, ...]] = []
    image = [-1] * n
    used = [False] * n
    image[0], used[0] = 0, True

    def extend(k: int) -> None:
        if k == len(order):
            out.append(tuple(image))
            return
        v = order[k]
        if v == 0:
            extend(k + 1)
            return
        for w in range(n):
            if used[w] or profile[w] != profile[v]:
                continue
            ok = True
            for u in order[:k]:
                if colour[u][v] != colour[image[u]][w]:
                    ok = False
                    break
            if ok:
                image[v], used[w] = w, True
                extend(k + 1)
                image[v], used[w] = -1, False

    extend(0)
    return out


def _with_translations(elements: Sequence[Element], stab: Iterable[tuple[int, ...]]) -> list[FiniteIsometry]:
    """Left-invariant colourings: every isometry is a translation after a
    stabilizer element."""
    index = {g: i for i, g in enumerate(elements)}
    trans = [tuple(index[g * x] for x in elements) for g in elements]
    out = {tuple(t[p] for p in s) for t in trans for s in stab}
    return [FiniteIsometry(p) for p in sorted(out)]


def enumerate_isometries(group: Group, S: GeneratingSet, max_order: int = DEFAULT_ORDER_BOUND) -> list[FiniteIsometry]:
    """All distance-preserving bijections of ``(G, d_S)`` over ``group.elements()``."""
    if S.group != group:
        raise GroupError("generating set is not in the group")
    elements = _check_finite(group, max_order)
    lengths = length_table(elements, S)
    if len(lengths) != len(elements) or any(isinstance(v, AtLeast) for v in lengths.values()):
        raise GroupError(f"{S} does not generate {group.descriptor()}")
    dm = distance_matrix(elements, lengths)
    return _with_translations(elements, _stabilizer(len(elements), dm))


def symmetric_generating_sets(group: Group, max_order: int = DEFAULT_FAMILY_ORDER_BOUND) -> list[GeneratingSet]:
    """Every inverse-closed, identity-free generating subset, in a fixed order."""
    elements = _check_finite(group, max_order)
    classes: list[tuple[Element, ...]] = []
    seen: set[Element] = set()
    for g in elements:
        if g.is_identity() or g in seen:
            continue
        cls = tuple(sorted({g, g.inverse()}))
        seen.update(cls)
        classes.append(cls)
    out = []
    n = group.order
    for mask in range(1, 1 << len(classes)):
        elems = tuple(x for i, c in enumerate(classes) if mask >> i & 1 for x in c)
        S = GeneratingSet(group, elems, True)
        metric = WordMetric(S)
        while not metric.exhausted:
            metric.extend()
        if len(metric.dist) == n:
            out.append(S)
    return out


@dataclass
class SharedIsometryGroup:
    group: Group
    elements: list[Element]
    isometries: list[FiniteIsometry]
    structure_hint: str
    family_size: int

    @property
    def order(self) -> int:
        return len(self.isometries)

    def to_dict(self):
        return {
            "group": self.group.descriptor(),
            "group_order": len(self.elements),
            "order": self.order,
            "structure_hint": self.structure_hint,
            "family_size": self.family_size,
            "elements": [str(g) for g in self.elements],
            "permutations": [p.cycles() for p in self.isometries],
        }


def structure_hint(elements: Sequence[Element], isometries: Iterable[FiniteIsometry]) -> str:
    index = {g: i for i, g in enumerate(elements)}
    trans = {tuple(index[g * x] for x in elements) for g in elements}
    inv = tuple(index[x.inverse()] for x in elements)
    perms = {p.perm for p in isometries}
    if perms == trans:
        return "translations"
    with_inv = trans | {tuple(t[i] for i in inv) for t in trans}
    if perms == with_inv:
        return "translations⋊inversion"
    return "other"


def shared_isometry_group(
    group: Group,
    family: Sequence[GeneratingSet] | None = None,
    max_order: int = DEFAULT_FAMILY_ORDER_BOUND,
) -> SharedIsometryGroup:
    """Permutations that are isometries for every set of ``family`` (default:
    all symmetric generating sets).

    The constraint is imposed on all distance matrices at once, so the search
    never materializes per-set isometry lists.
    """
    elements = _check_finite(group, max_order)
    if family is None:
        family = symmetric_generating_sets(group, max_order)
    if not family:
        raise GroupError("empty family")
    tables = [length_table(elements, S) for S in family]
    colour = [[tuple(t[x.inverse() * y] for t in tables) for y in elements] for x in elements]
    isos = _with_translations(elements, _stabilizer(len(elements), colour))
    return SharedIsometryGroup(group, list(elements), isos, structure_hint(elements, isos), len(family))


# ---------------------------------------------------------------------------
# refutation on infinite groups


def build_family(req: FamilyRequest) -> Family:
    G = req.g.group
    if isinstance(G, FreeAbelian) and G.rank == 1:
        return family_abelian_z(req.g, req.h, req.R)
    if isinstance(G, FreeGroup):
        return family_free(req.g, req.h, req.R)
    raise GroupError(f"no family construction for {G.descriptor()}")


@dataclass
class Refutation:
    refuted: bool
    x: Element | None = None
    y: Element | None = None
    generating_set: GeneratingSet | None = None
    d_domain: int | None = None
    d_image: int | None = None
    source: str = ""
    pairs_checked: int = 0
    sets_checked: int = 0

    def to_dict(self):
        out = {"refuted": self.refuted, "pairs_checked": self.pairs_checked, "sets_checked": self.sets_checked}
        if self.refuted:
            out.update(
                {
                    "x": str(self.x),
                    "y": str(self.y),
                    "generators": [str(s) for s in self.generating_set.elements],
                    "d_domain": str(self.d_domain),
                    "d_image": str(self.d_image),
                    "source": self.source,
                }
            )
        return out


def _violation(metric: WordMetric, z: Element, zp: Element, lam, eps, limit: int):
    """Certified breach of ``d/lam - eps <= d' <= lam d + eps`` for
    ``d = ||z||``, ``d' = ||z'||``; returns ``(d, d')`` or ``None``."""
    dz = metric.length(z, limit)
    if isinstance(dz, AtLeast):
        dzp = metric.length(zp, limit)
        if not isinstance(dzp, AtLeast) and dz / lam - eps > dzp:
            return dz, dzp
        return None
    upper = lam * dz + eps
    dzp = metric.length(zp, math.floor(upper) + 1)
    if dzp > upper or dz / lam - eps > dzp:
        return dz, dzp
    return None


def refute_shared_candidate(
    phi: ElementMap | CoarseMap,
    lam,
    eps,
    r: int,
    requests: Sequence[FamilyRequest] = (),
    pairs: Sequence[tuple[Element, Element]] | None = None,
    cap: int | None = None,
) -> Refutation:
    """Try to show that ``phi`` is not a shared ``(lam, eps)``-quasi-isometry.

    For each sampled pair ``x, y`` with ``z' = phi(y)^-1 phi(x)`` different
    from ``z^(+-1)``, ``z = y^-1 x``, the set ``S(z, z', ceil((1+eps)(1+lam)))``
    must separate the two, which breaks the bound on that pair.  Every set
    from ``requests`` is then checked on all sampled pairs as well.
    """
    f = phi.forward if isinstance(phi, CoarseMap) else phi
    G = f.domain
    if f.codomain != G:
        raise GroupError("candidate must map the group to itself")
    if pairs is None:
        ball = WordMetric(GeneratingSet.standard(G), cap=cap).ball_payloads(r)
        elems = sorted(Element(G, p) for p in ball)
        pairs = [(x, y) for x in elems for y in elems if x != y]
    images = {}
    for x, y in pairs:
        images.setdefault(x, f(x))
        images.setdefault(y, f(y))
    R = math.ceil((1 + eps) * (1 + lam))
    limit = math.ceil(lam * (2 * r + 1) + eps) + 2 * R + 2
    result = Refutation(False)
    metrics: dict = {}

    def metric_for(S):
        return metrics.setdefault(S.elements, WordMetric(S, cap=cap))

    for x, y in pairs:
        z = y.inverse() * x
        zp = images[y].inverse() * images[x]
        result.pairs_checked += 1
        if zp == z or zp == z.inverse():
            continue
        fam = build_family(FamilyRequest(z, zp, R))
        result.sets_checked += 1
        hit = _violation(metric_for(fam.S), z, zp, lam, eps, limit)
        if hit:
            return Refutation(True, x, y, fam.S, hit[0], hit[1], "lemma", result.pairs_checked, result.sets_checked)
    for req in requests:
        fam = build_family(req)
        m = metric_for(fam.S)
        result.sets_checked += 1
        for x, y in pairs:
            z = y.inverse() * x
            zp = images[y].inverse() * images[x]
            if lam >= 1 and eps >= 0 and (zp == z or zp == z.inverse()):
                # equal lengths in a symmetric set never breach the bound
                continue
            hit = _violation(m, z, zp, lam, eps, limit)
            if hit:
                return Refutation(True, x, y, fam.S, hit[0], hit[1], "request", result.pairs_checked, result.sets_checked)
    return result


# ---------------------------------------------------------------------------
# sign homomorphy


@dataclass
class SignRow:
    g: Element
    h: Element
    status: str  # "+1", "-1", "both", "neither"
    sign: int | None
    deviation: int | None = None

    def to_dict(self):
        out = {"g": str(self.g), "h": str(self.h), "status": self.status, "sign": self.sign}
        if self.deviation is not None:
            out["deviation"] = str(self.deviation)
        return out


@dataclass
class SignReport:
    rows: list[SignRow]
    normalized_by: Element | None = None

    @property
    def signs(self) -> set[int]:
        return {row.sign for row in self.rows if row.sign is not None}

    @property
    def hard_failures(self) -> list[SignRow]:
        return [row for row in self.rows if row.status == "neither"]

    @property
    def homomorphism_evidence(self) -> bool:
        return not self.hard_failures and self.signs <= {1}

    def to_dict(self):
        return {
            "normalized_by": None if self.normalized_by is None else str(self.normalized_by),
            "signs": sorted(self.signs),
            "hard_failures": len(self.hard_failures),
            "homomorphism_evidence": self.homomorphism_evidence,
            "rows": [row.to_dict() for row in self.rows],
        }


def check_sign_homomorphy(
    phi: ElementMap | CoarseMap,
    pairs: Sequence[tuple[Element, Element]] | None = None,
    S_dom: GeneratingSet | None = None,
    S_cod: GeneratingSet | None = None,
    r: int = 2,
    cap: int | None = None,
) -> SignReport:
    """Classify ``phi(gh)`` against ``phi(g) phi(h)^(+-1)`` per pair.

    ``phi`` is first translated so that ``phi(e) = e``.  Without explicit
    pairs, all pairs from the radius-``r`` ball of ``S_dom`` are used.  A
    "neither" row carries the ``S_cod`` distance to the nearer candidate.
    """
    f = phi.forward if isinstance(phi, CoarseMap) else phi
    G, H = f.domain, f.codomain
    c = f(G.identity())
    shift = None
    if not c.is_identity():
        shift = c
        f = compose(translation(c.inverse()), f)
    if pairs is None:
        S_dom = S_dom or GeneratingSet.standard(G)
        elems = sorted(Element(G, p) for p in WordMetric(S_dom, cap=cap).ball_payloads(r))
        pairs = [(g, h) for g in elems for h in elems]
    metric = WordMetric(S_cod or GeneratingSet.standard(H), cap=cap)
    rows = []
    for g, h in pairs:
        lhs = f(g * h)
        fg, fh = f(g), f(h)
        plus = lhs == fg * fh
        minus = lhs == fg * fh.inverse()
        if plus and minus:
            rows.append(SignRow(g, h, "both", 1))
        elif plus:
            rows.append(SignRow(g, h, "+1", 1))
        elif minus:
            rows.append(SignRow(g, h, "-1", -1))
        else:
            dev = min(
                metric.length(lhs.inverse() * fg * fh, 64),
                metric.length(lhs.inverse() * fg * fh.inverse(), 64),
            )
            rows.append(SignRow(g, h, "neither", None, dev))
    return SignReport(rows, shift)


# ---------------------------------------------------------------------------
# the sixteen cases


# (relation, relator on letters x y X Y, contradicted condition)
RELATION_TEMPLATES = (
    ("(xy)^2=e", "xyxy", "c"),
    ("(xy^-1)^2=e", "xYxY", "c"),
    ("x^2=e", "xx", "a"),
    ("y^2=e", "yy", "a"),
    ("x^y=x^-1", "Yxyx", "e"),
    ("y^x=y^-1", "Xyxy", "e"),
    ("x^2=y^2", "xxYY", "b"),
    ("x^-2=y^2", "XXYY", "b"),
    ("x^y=x", "YxyX", "d"),
)

_LETTER = {"x": 1, "y": 2, "X": -1, "Y": -2}
_TEXT = {v: k for k, v in _LETTER.items()}


def _letters(text: str) -> tuple[int, ...]:
    return tuple(_LETTER[c] for c in text)


def cyclic_reduce(w: tuple[int, ...]) -> tuple[int, ...]:
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


def cyclic_class(w: tuple[int, ...]) -> frozenset:
    """All rotations of ``w`` and of its inverse."""
    inv = tuple(-a for a in reversed(w))
    return frozenset(v[i:] + v[:i] for v in (w, inv) for i in range(max(len(v), 1)))


@dataclass(frozen=True)
class CaseRow:
    number: int
    signs: tuple[int, int, int, int]
    relator: str
    relation: str
    contradicts: str

    def to_dict(self):
        a, b, c, d = ("+" if s > 0 else "-" for s in self.signs)
        return {
            "nr": self.number,
            "alpha": a,
            "beta": b,
            "gamma": c,
            "delta": d,
            "relation": self.relation,
            "contradiction": self.contradicts,
            "relator": self.relator,
        }

    def line(self) -> str:
        signs = " ".join("+" if s > 0 else "-" for s in self.signs)
        return f"{self.number:>2}  {signs}  {self.relation:<12} {self.contradicts}"


def sixteen_case_table() -> list[CaseRow]:
    """Solve ``x^a y^b = (x y^c)^d`` over all sign choices in the free group
    on ``x, y`` and name the relation each case forces."""
    F = FreeGroup(2)
    x, y = F.generators()
    templates = [(cyclic_class(_letters(t)), rel, cid) for rel, t, cid in RELATION_TEMPLATES]
    rows = []
    for n, (a, b, c, d) in enumerate(itertools.product((1, -1), repeat=4), start=1):
        w = cyclic_reduce((x ** a * y ** b * (x * y ** c) ** (-d)).payload)
        text = "".join(_TEXT[l] for l in w)
        if not w:
            rows.append(CaseRow(n, (a, b, c, d), "", "none", "no"))
            continue
        for cls, rel, cid in templates:
            if w in cls:
                rows.append(CaseRow(n, (a, b, c, d), text, rel, cid))
                break
        else:
            raise AssertionError(f"unclassified relator {text}")
    return rows
