"""Certification of coarse maps between Cayley graphs on finite balls.

A :class:`CoarseMap` pairs a forward map with a backward map.  On a ball of
radius ``r`` the two-sided bound

    d_X(x, x') / lam - eps <= d_Y(f x, f x') <= lam * d_X(x, x') + eps

is checked with exact rational arithmetic for every ``lam`` of a grid; the
smallest admissible ``eps`` per ``lam`` ends up in a :class:`QIFit`.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .groups import Element, Group, GroupError, evaluate_word, SubgroupEmbedding
from .metric import (
    AtLeast,
    CapExceeded,
    GeneratingSet,
    WordMetric,
    multi_source_distances,
)

DEFAULT_LAMBDA_GRID = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4))


class MapUndefined(KeyError):
    """A table map was evaluated outside its table."""


class ElementMap:
    """Callable ``Element -> Element`` with domain and codomain attached."""

    is_homomorphism = False

    def __init__(self, domain: Group, codomain: Group, name: str = "map"):
        self.domain = domain
        self.codomain = codomain
        self.name = name

    def __call__(self, g: Element) -> Element:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}: {self.domain} -> {self.codomain}>"


class HomomorphismMap(ElementMap):
    """Homomorphism given by images of the domain's standard generators,
    extended by evaluating the normal form as a word."""

    is_homomorphism = True

    def __init__(self, domain: Group, codomain: Group, images: Sequence[Element], name: str = "hom"):
        super().__init__(domain, codomain, name)
        if len(images) != len(domain.generator_payloads()):
            raise GroupError("need one image per domain generator")
        for im in images:
            if im.group != codomain:
                raise GroupError(f"image {im} is not in {codomain}")
        self.images = tuple(images)

    def __call__(self, g):
        return evaluate_word(self.codomain, self.images, self.domain.word(g.payload))


class FunctionMap(ElementMap):
    def __init__(self, domain, codomain, fn: Callable[[Element], Element], name="fn", homomorphism=False):
        super().__init__(domain, codomain, name)
        self.fn = fn
        self.is_homomorphism = homomorphism

    def __call__(self, g):
        return self.fn(g)


class TableMap(ElementMap):
    """Explicit finite table; only meaningful inside an enumerated ball."""

    def __init__(self, domain, codomain, table: dict, name="table"):
        super().__init__(domain, codomain, name)
        self.table = dict(table)

    def __call__(self, g):
        try:
            return self.table[g]
        except KeyError:
            raise MapUndefined(f"{self.name} undefined at {g}") from None


def identity_map(group: Group) -> ElementMap:
    return FunctionMap(group, group, lambda g: g, "identity", homomorphism=True)


def translation(g: Element) -> ElementMap:
    return FunctionMap(g.group, g.group, lambda x: g * x, f"translate({g})")


def power_map(group: Group, k: int) -> ElementMap:
    """``x -> x^k``; a homomorphism when the group is abelian."""
    return FunctionMap(group, group, lambda x: x ** k, f"power({k})", homomorphism=group.is_abelian)


def inversion_map(group: Group) -> ElementMap:
    return power_map(group, -1)


def compose(outer: ElementMap, inner: ElementMap) -> ElementMap:
    if inner.codomain != outer.domain:
        raise GroupError("maps do not compose")
    return FunctionMap(
        inner.domain,
        outer.codomain,
        lambda g: outer(inner(g)),
        f"{outer.name}.{inner.name}",
        homomorphism=outer.is_homomorphism and inner.is_homomorphism,
    )


def first_factor_projection(group: Group) -> tuple[ElementMap, ElementMap]:
    """Projection of a direct or semidirect product onto its first factor and
    the section ``g -> (g, e)``."""
    from .groups import DirectProduct, SemidirectProduct

    if isinstance(group, SemidirectProduct):
        base, other = group.normal, group.finite
        hom = False
    elif isinstance(group, DirectProduct):
        base, other = group.left, group.right
        hom = True
    else:
        raise GroupError(f"{group} is not a product")
    e = other.identity_payload
    proj = FunctionMap(group, base, lambda g: Element(base, g.payload[0]), "project", homomorphism=hom)
    sect = FunctionMap(base, group, lambda g: Element(group, (g.payload, e)), "section", homomorphism=True)
    return proj, sect


def embedding_maps(emb: SubgroupEmbedding) -> tuple[ElementMap, ElementMap]:
    """Forward map of a finite-index embedding plus the coset-section backward
    map ``g -> preimage(g * t(g)^-1)``."""
    fwd = FunctionMap(emb.domain, emb.codomain, emb.image, "embed", homomorphism=True)

    def back(g):
        return emb.preimage(g * emb.coset_representative(g).inverse())

    bwd = FunctionMap(emb.codomain, emb.domain, back, "coset-section")
    return fwd, bwd


@dataclass
class CoarseMap:
    forward: ElementMap
    backward: ElementMap

    def __post_init__(self):
        if self.forward.domain != self.backward.codomain or self.forward.codomain != self.backward.domain:
            raise GroupError("forward and backward maps do not match")

    @property
    def domain(self) -> Group:
        return self.forward.domain

    @property
    def codomain(self) -> Group:
        return self.forward.codomain

    def reversed(self) -> "CoarseMap":
        return CoarseMap(self.backward, self.forward)

    def then(self, other: "CoarseMap") -> "CoarseMap":
        """``other`` after ``self``."""
        return CoarseMap(compose(other.forward, self.forward), compose(self.backward, other.backward))


def identity_coarse_map(group: Group) -> CoarseMap:
    m = identity_map(group)
    return CoarseMap(m, m)


# ---------------------------------------------------------------------------
# fitting


def _frac_out(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class Witness:
    x: Element
    x_prime: Element
    d_dom: int
    d_cod: int
    direction: str

    @property
    def discrepancy(self) -> int:
        return abs(self.d_cod - self.d_dom)

    def to_dict(self):
        return {
            "direction": self.direction,
            "x": str(self.x),
            "x_prime": str(self.x_prime),
            "d_domain": int(self.d_dom),
            "d_codomain": int(self.d_cod),
            "codomain_exact": not isinstance(self.d_cod, AtLeast),
        }


@dataclass
class QIFit:
    lambda_grid: list[Fraction]
    eps_of_lambda: list[Fraction]
    nearness_defect: int
    surjectivity_defect: int
    radius: int
    inner_radius: int
    best_lambda: Fraction
    best_eps: Fraction
    exact: bool = True
    witnesses: list[Witness | None] = field(default_factory=list)
    pair_count: int = 0

    def eps(self, lam) -> Fraction:
        return self.eps_of_lambda[self.lambda_grid.index(Fraction(lam))]

    def witness(self, lam=None) -> Witness | None:
        lam = self.best_lambda if lam is None else Fraction(lam)
        return self.witnesses[self.lambda_grid.index(lam)]

    def to_dict(self) -> dict:
        out = {
            "lambda": _frac_out(self.best_lambda),
            "eps": _frac_out(self.best_eps),
            "nearness_defect": int(self.nearness_defect),
            "surjectivity_defect": int(self.surjectivity_defect),
            "radius": self.radius,
            "inner_radius": self.inner_radius,
            "exact": self.exact,
            "grid": [{"lambda": _frac_out(l), "eps": _frac_out(e)} for l, e in zip(self.lambda_grid, self.eps_of_lambda)],
        }
        w = self.witness()
        if w is not None and self.best_eps > 0:
            out["witness"] = w.to_dict()
        return out


def _defect(lam: Fraction, dx: int, dy: int) -> Fraction:
    return max(dy - lam * dx, dx / lam - dy, Fraction(0))


def _anchors(metric: WordMetric, r: int, n_anchors: int, anchor_radius: int, seed: int) -> list:
    ball = metric.ball_payloads(r)
    inner = metric.ball_payloads(min(anchor_radius, r))
    if len(ball) <= n_anchors + len(inner):
        return ball
    rng = random.Random(seed)
    group = metric.group
    rest = sorted(set(ball) - set(inner), key=group.order_key)
    return inner + sorted(rng.sample(rest, n_anchors), key=group.order_key)


def _pair_profile(
    f: ElementMap,
    mx: WordMetric,
    my: WordMetric,
    r: int,
    cod_limit: int,
    n_anchors: int,
    anchor_radius: int,
    seed: int,
) -> tuple[dict, int]:
    """Distinct ``(d_X, d_Y)`` combinations over the sampled pairs
    ``(x, x z)`` with ``x`` an anchor and ``z`` in ``B_X(r)``; one witness each."""
    X, Y = mx.group, my.group
    ball = mx.ball_payloads(r)
    dist_x = mx.dist
    if f.is_homomorphism:
        # f(x)^-1 f(xz) = f(z): every anchor gives the same profile.
        anchors = [X.identity_payload]
    else:
        anchors = _anchors(mx, r, n_anchors, anchor_radius, seed)
    combos: dict = {}
    count = 0
    mul_x, mul_y, inv_y = X.mul, Y.mul, Y.inv
    for a in anchors:
        xa = Element(X, a)
        fa_inv = inv_y(f(xa).payload)
        for z in ball:
            xp = mul_x(a, z)
            fxp = f(Element(X, xp)).payload
            dy = my.length_payload(mul_y(fa_inv, fxp), cod_limit)
            key = (dist_x[z], dy)
            if key not in combos:
                combos[key] = (a, xp)
            count += 1
    return combos, count


def _nearness(gf: Callable, metric: WordMetric, r_inner: int, limit: int):
    worst, worst_x = 0, None
    G = metric.group
    for p in metric.ball_payloads(r_inner):
        x = Element(G, p)
        d = metric.length_payload(G.mul(G.inv(p), gf(x).payload), limit)
        if worst_x is None or d > worst:
            worst, worst_x = d, x
    return worst, worst_x


def fit_parameters(
    cmap: CoarseMap,
    S_dom: GeneratingSet,
    S_cod: GeneratingSet,
    r: int,
    lambda_grid: Iterable = DEFAULT_LAMBDA_GRID,
    *,
    n_anchors: int = 16,
    anchor_radius: int = 1,
    codomain_limit: int | None = None,
    seed: int = 0,
    cap: int | None = None,
) -> QIFit:
    """Fit ``(lam, eps)`` for ``cmap`` on balls of radius ``r``.

    Sampled pairs are ``(x, x z)`` with ``z`` in the radius-``r`` ball and ``x``
    drawn from anchors: the ``anchor_radius`` ball plus ``n_anchors`` seeded
    ball elements (a single anchor for homomorphisms, which is exact by
    left-invariance).  Both directions contribute.  Codomain distances beyond
    ``codomain_limit`` (default ``ceil(max lam * r) + r``) are lower bounds and
    clear ``exact``.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    if S_dom.group != cmap.domain or S_cod.group != cmap.codomain:
        raise GroupError("generating sets do not match the map")
    grid = sorted({Fraction(l) for l in lambda_grid})
    if not grid or grid[0] <= 0:
        raise ValueError("lambda grid must be positive")
    limit = codomain_limit if codomain_limit is not None else math.ceil(grid[-1] * r) + r
    mx = WordMetric(S_dom, cap=cap)
    my = WordMetric(S_cod, cap=cap)
    X, Y = cmap.domain, cmap.codomain
    fwd, n1 = _pair_profile(cmap.forward, mx, my, r, limit, n_anchors, anchor_radius, seed)
    bwd, n2 = _pair_profile(cmap.backward, my, mx, r, limit, n_anchors, anchor_radius, seed)
    exact = not any(isinstance(k[1], AtLeast) for k in list(fwd) + list(bwd))

    eps_list, witnesses = [], []
    for lam in grid:
        best, wit = Fraction(0), None
        for direction, combos, (G, H) in (("forward", fwd, (X, Y)), ("backward", bwd, (Y, X))):
            for (dx, dy), (a, b) in sorted(combos.items()):
                d = _defect(lam, dx, dy)
                if d > best:
                    best = d
                    wit = Witness(Element(G, a), Element(G, b), dx, dy, direction)
        eps_list.append(best)
        witnesses.append(wit)
    # non-increasing by construction of _defect in lam for fixed pairs
    i0 = min(range(len(grid)), key=lambda i: (grid[i] * r + eps_list[i], grid[i]))
    lam0, eps0 = grid[i0], eps_list[i0]
    inner = max(0, math.floor((r - eps0) / lam0))

    near_limit = limit
    nf, _ = _nearness(lambda x: cmap.backward(cmap.forward(x)), mx, inner, near_limit)
    nb, _ = _nearness(lambda y: cmap.forward(cmap.backward(y)), my, inner, near_limit)
    nearness = max(nf, nb)
    sources = {cmap.forward(Element(X, p)).payload for p in mx.ball_payloads(r)}
    # the target ball sits around the image of the domain centre
    c = cmap.forward(X.identity()).payload
    targets = [Y.mul(c, p) for p in my.ball_payloads(inner)]
    surj, _ = multi_source_distances(S_cod, sources, targets, near_limit, cap=cap)
    exact = exact and not any(isinstance(v, AtLeast) for v in (nf, nb, surj))
    return QIFit(grid, eps_list, nearness, surj, r, inner, lam0, eps0, exact, witnesses, n1 + n2)


@dataclass
class RoughCheck:
    passed: bool
    eps_budget: Fraction
    fit: QIFit
    witness: Witness | None
    reason: str

    def to_dict(self):
        out = {
            "passed": self.passed,
            "eps_budget": _frac_out(self.eps_budget),
            "reason": self.reason,
            "fit": self.fit.to_dict(),
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        return out


def check_rough_isometry(
    cmap: CoarseMap,
    S_dom: GeneratingSet,
    S_cod: GeneratingSet,
    r: int,
    eps_budget,
    **kwargs,
) -> RoughCheck:
    """Pass iff the ``lam = 1`` defect, both composition defects and the
    surjectivity defect are all within ``eps_budget`` on the sampled balls."""
    budget = Fraction(eps_budget)
    kwargs.setdefault("codomain_limit", r + math.floor(budget) + 1)
    fit = fit_parameters(cmap, S_dom, S_cod, r, [1], **kwargs)
    e1 = fit.eps(1)
    if e1 > budget:
        return RoughCheck(False, budget, fit, fit.witness(1), f"distance defect {_frac_out(e1)} exceeds budget")
    if fit.nearness_defect > budget:
        return RoughCheck(False, budget, fit, None, f"nearness defect {fit.nearness_defect} exceeds budget")
    if fit.surjectivity_defect > budget:
        return RoughCheck(False, budget, fit, None, f"surjectivity defect {fit.surjectivity_defect} exceeds budget")
    return RoughCheck(True, budget, fit, fit.witness(1), "ok")


@dataclass
class TransferRow:
    radius: int
    lhs: int
    factor: int
    rhs_count: int
    rhs_radius: int
    holds: bool
    side: str


@dataclass
class TransferReport:
    passed: bool
    eps: int
    rows: list[TransferRow]

    def to_dict(self):
        return {
            "passed": self.passed,
            "eps": self.eps,
            "rows": [
                {
                    "side": row.side,
                    "radius": row.radius,
                    "lhs": row.lhs,
                    "factor": row.factor,
                    "rhs_count": row.rhs_count,
                    "rhs_radius": row.rhs_radius,
                    "holds": row.holds,
                }
                for row in self.rows
            ],
        }


def _sizes_lower(metric: WordMetric, r: int) -> list[int]:
    try:
        return metric.sizes(r)
    except CapExceeded as exc:
        return metric.sizes(exc.radius)


def growth_transfer_check(
    cmap: CoarseMap,
    S_dom: GeneratingSet,
    S_cod: GeneratingSet,
    eps,
    r: int,
    cap: int | None = None,
) -> TransferReport:
    """Check ``#B_G(k) <= #B_G(eps) * #B_H(k + eps)`` and the mirrored bound
    for every ``k <= r``.

    When a ball overflows ``cap`` the largest complete ball stands in for the
    right-hand count (a valid lower bound by monotonicity); if that is not
    enough to certify a row, :class:`CapExceeded` is raised.
    """
    e = math.ceil(eps)
    rows: list[TransferRow] = []
    sides = (
        ("domain", WordMetric(S_dom, cap=cap), WordMetric(S_cod, cap=cap)),
        ("codomain", WordMetric(S_cod, cap=cap), WordMetric(S_dom, cap=cap)),
    )
    for side, ma, mb in sides:
        sa = ma.sizes(max(r, e))
        sb = _sizes_lower(mb, r + e)
        for k in range(r + 1):
            rk = min(k + e, len(sb) - 1)
            holds = sa[k] <= sa[e] * sb[rk]
            if not holds and rk < k + e:
                raise CapExceeded(len(sb) - 1, sb[-1], mb.cap)
            rows.append(TransferRow(k, sa[k], sa[e], sb[rk], rk, holds, side))
    return TransferReport(all(row.holds for row in rows), e, rows)
