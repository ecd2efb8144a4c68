"""Quotients by finite normal subgroups, enlarged generating sets, and
finite-ball evidence for homomorphisms that are quasi-isometries."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .coarse import (
    CoarseMap,
    ElementMap,
    FunctionMap,
    QIFit,
    fit_parameters,
    identity_coarse_map,
)
from .groups import DirectProduct, Element, Group, GroupError, conjugate
from .isometry import SignReport
from .metric import (
    GeneratingSet,
    WordMetric,
    check_subgroup,
    generate_subgroup,
    multi_source_distances,
    subgroup_diameter,
)


def check_normal(H: Sequence[Element], S: GeneratingSet) -> None:
    """Conjugation by every generator and inverse must map ``H`` onto itself."""
    hset = set(H)
    for s in set(S.elements) | {s.inverse() for s in S.elements}:
        for h in hset:
            if conjugate(h, s) not in hset:
                raise GroupError(f"not normal: {h} conjugated by {s} leaves the subgroup")


@dataclass(frozen=True)
class QuotientSpec:
    group: Group
    H: tuple[Element, ...]
    S0: GeneratingSet

    def __post_init__(self):
        object.__setattr__(self, "H", tuple(sorted(set(self.H) | {self.group.identity()})))
        check_subgroup(self.H)
        check_normal(self.H, self.S0)


@dataclass
class QuotientIsometry:
    spec: QuotientSpec
    quotient: Group
    S: GeneratingSet
    S_prime: GeneratingSet
    cmap: CoarseMap

    def to_dict(self):
        return {
            "group": self.spec.group.descriptor(),
            "quotient": self.quotient.descriptor(),
            "H": [str(h) for h in self.spec.H],
            "S": [str(s) for s in self.S.elements],
            "S_prime": [str(s) for s in self.S_prime.elements],
        }


def _factor_projection(G: Group, H: set) -> tuple[Group, ElementMap, ElementMap] | None:
    if not isinstance(G, DirectProduct):
        return None
    for keep, drop in ((0, 1), (1, 0)):
        factors = (G.left, G.right)
        F, K = factors[keep], factors[drop]
        if not K.is_finite:
            continue
        e_keep = F.identity_payload
        full = set()
        for k in K.element_payloads():
            full.add(Element(G, (e_keep, k) if keep == 0 else (k, e_keep)))
        if full != H:
            continue
        e_drop = K.identity_payload

        def proj(g, keep=keep, F=F):
            return Element(F, g.payload[keep])

        def sect(g, keep=keep, e_drop=e_drop):
            return Element(G, (g.payload, e_drop) if keep == 0 else (e_drop, g.payload))

        return (
            F,
            FunctionMap(G, F, proj, "quotient", homomorphism=True),
            FunctionMap(F, G, sect, "section", homomorphism=False),
        )
    return None


def build_quotient_isometry(spec: QuotientSpec) -> QuotientIsometry:
    """Enlarge ``S0`` by ``H``, project it to ``G/H``, and return the coset map.

    ``G/H`` needs a normal form: ``H`` trivial, or ``H`` a whole finite factor
    of a direct product.
    """
    G = spec.group
    hset = set(spec.H)
    S = spec.S0.union((h for h in spec.H if not h.is_identity()), label="S0+H")
    if len(hset) == 1:
        return QuotientIsometry(spec, G, S, S, identity_coarse_map(G))
    found = _factor_projection(G, hset)
    if found is None:
        raise GroupError("no coset normal form: H must be trivial or a full finite factor")
    Q, eta, section = found
    proj = [eta(s) for s in S.elements]
    S_prime = GeneratingSet(Q, tuple(p for p in proj if not p.is_identity()), True, "projected")
    return QuotientIsometry(spec, Q, S, S_prime, CoarseMap(eta, section))


@dataclass
class EnlargementResult:
    fit: QIFit
    diameter: int
    holds: bool
    H: list[Element] = field(default_factory=list)

    def to_dict(self):
        return {
            "holds": self.holds,
            "eps": int(self.fit.eps(1)),
            "diameter": self.diameter,
            "H": [str(h) for h in self.H],
            "fit": self.fit.to_dict(),
        }


def enlargement_isometry(group: Group, S: GeneratingSet, S_H: GeneratingSet, r: int, cap: int | None = None) -> EnlargementResult:
    """Fit the identity ``(G, d_S) -> (G, d_{S + S_H})`` and compare its
    ``lam = 1`` defect with ``diam_S(H)``, ``H`` generated by ``S_H``."""
    H = generate_subgroup(group, S_H.elements)
    check_normal(H, S)
    S_big = S.union(S_H.elements, label="S+S_H")
    fit = fit_parameters(identity_coarse_map(group), S, S_big, r, [1], cap=cap)
    diam = subgroup_diameter(group, S, H, cap=cap)
    return EnlargementResult(fit, diam, fit.eps(1) <= diam, H)


# ---------------------------------------------------------------------------
# homomorphisms


@dataclass
class HomAnalysis:
    kernel_by_radius: list[list[Element]]
    kernel_stable: bool
    stable_from: int | None
    image_density: int
    inner_radius: int
    multiplicative: bool
    witness: tuple | None = None

    @property
    def kernel_ball(self) -> list[Element]:
        return self.kernel_by_radius[-1]

    def to_dict(self):
        return {
            "multiplicative": self.multiplicative,
            "kernel_ball": [str(k) for k in self.kernel_ball],
            "kernel_sizes": [len(k) for k in self.kernel_by_radius],
            "kernel_stable": self.kernel_stable,
            "stable_from": self.stable_from,
            "image_density": str(self.image_density),
            "inner_radius": self.inner_radius,
            "witness": None if self.witness is None else [str(w) for w in self.witness],
        }


def _first_non_multiplicative(phi: ElementMap, elems: Sequence[Element]):
    for g, h in itertools.product(elems, repeat=2):
        if phi(g * h) != phi(g) * phi(h):
            return g, h
    return None


def homomorphism_qi_analysis(
    phi: ElementMap,
    S_G: GeneratingSet,
    S_H: GeneratingSet,
    r: int,
    inner_radius: int | None = None,
    sample_radius: int = 2,
    cap: int | None = None,
) -> HomAnalysis:
    """Kernel balls for every radius up to ``r`` and the density of
    ``phi(B_G(r))`` in ``B_H(inner_radius)`` (default ``r // 2``).

    The kernel counts as finite when the two largest radii give the same set.
    """
    G, H = phi.domain, phi.codomain
    mg = WordMetric(S_G, cap=cap)
    inner = r // 2 if inner_radius is None else inner_radius
    sample = sorted(Element(G, p) for p in mg.ball_payloads(min(sample_radius, r)))
    bad = _first_non_multiplicative(phi, sample)
    e = H.identity()
    layers = []
    ball = mg.ball_payloads(r)
    images = {p: phi(Element(G, p)) for p in ball}
    for k in range(r + 1):
        layers.append(sorted(Element(G, p) for p in ball if mg.dist[p] <= k and images[p] == e))
    stable = r >= 1 and layers[-1] == layers[-2]
    stable_from = None
    if stable:
        stable_from = r
        while stable_from > 0 and layers[stable_from - 1] == layers[-1]:
            stable_from -= 1
    targets = WordMetric(S_H, cap=cap).ball_payloads(inner)
    density, _ = multi_source_distances(S_H, {im.payload for im in images.values()}, targets, r + inner + 1, cap=cap)
    return HomAnalysis(layers, stable, stable_from, density, inner, bad is None, bad)


@dataclass
class CorollaryCheck:
    passed: bool
    stage: str
    witness: tuple = ()
    detail: str = ""

    def to_dict(self):
        return {"passed": self.passed, "stage": self.stage, "detail": self.detail, "witness": [str(w) for w in self.witness]}


def corollary_quotient_check(
    phi: CoarseMap | ElementMap,
    sign_report: SignReport,
    S_G: GeneratingSet,
    S_H: GeneratingSet,
    r: int,
    cap: int | None = None,
) -> CorollaryCheck:
    """Staged check that the codomain looks like ``G / ker phi`` on balls.

    Stages: homomorphism evidence from ``sign_report``, surjectivity onto the
    inner ball, kernel stabilization, and a multiplicative bijection between
    cosets and images on the inner ball.
    """
    f = phi.forward if isinstance(phi, CoarseMap) else phi
    G = f.domain
    if not sign_report.homomorphism_evidence:
        bad = next((row for row in sign_report.rows if row.sign != 1), None)
        wit = () if bad is None else (bad.g, bad.h)
        return CorollaryCheck(False, "homomorphism", wit, f"sign {bad.status if bad else '?'} observed")
    analysis = homomorphism_qi_analysis(f, S_G, S_H, r, cap=cap)
    if not analysis.multiplicative:
        return CorollaryCheck(False, "homomorphism", analysis.witness, "not multiplicative on sampled pairs")
    inner = analysis.inner_radius
    if analysis.image_density != 0:
        return CorollaryCheck(False, "surjectivity", (), f"image misses the inner ball by {analysis.image_density}")
    if not analysis.kernel_stable:
        return CorollaryCheck(False, "kernel", tuple(analysis.kernel_ball), "kernel ball still growing")
    kernel = set(analysis.kernel_ball)
    mg = WordMetric(S_G, cap=cap)
    half = sorted(Element(G, p) for p in mg.ball_payloads(inner // 2 if inner >= 2 else inner))
    for g1, g2 in itertools.product(half, repeat=2):
        same_coset = g1.inverse() * g2 in kernel
        if same_coset != (f(g1) == f(g2)):
            return CorollaryCheck(False, "bijection", (g1, g2), "cosets and images disagree")
        if f(g1 * g2) != f(g1) * f(g2):
            return CorollaryCheck(False, "bijection", (g1, g2), "induced map not multiplicative")
    return CorollaryCheck(True, "done", (), f"kernel of order {len(kernel)}")
