"""Word metrics on Cayley graphs: balls, word lengths, growth, diameters."""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .groups import Element, Group, GroupError

DEFAULT_CAP = int(os.environ.get("COARSEGROUPS_CAP", 5_000_000))


class CapExceeded(RuntimeError):
    """BFS stopped before reaching the requested radius.

    ``radius`` is the largest fully completed radius; ``ball`` (when set) is
    the ball enumerated up to it.
    """

    def __init__(self, radius: int, size: int, cap: int, ball: "Ball | None" = None):
        super().__init__(f"cap of {cap} elements exceeded after completing radius {radius} ({size} elements)")
        self.radius = radius
        self.size = size
        self.cap = cap
        self.ball = ball


class AtLeast(int):
    """Certified lower bound returned when a word length exceeds the search radius."""

    def __repr__(self):
        return f"AtLeast({int(self)})"

    def __str__(self):
        return f">={int(self)}"


@dataclass(frozen=True)
class GeneratingSet:
    """Finite generating list.  With ``symmetric`` set the list is closed under
    inversion on construction (inverses are appended right after their
    element)."""

    group: Group
    elements: tuple[Element, ...]
    symmetric: bool = True
    label: str = ""

    def __post_init__(self):
        seen: dict[Element, None] = {}
        for g in self.elements:
            if g.group != self.group:
                raise GroupError(f"{g!r} is not in {self.group.descriptor()}")
            if g.is_identity():
                raise GroupError("identity element in generating set")
            seen.setdefault(g)
            if self.symmetric:
                seen.setdefault(g.inverse())
        object.__setattr__(self, "elements", tuple(seen))

    @classmethod
    def standard(cls, group: Group, symmetric: bool = True) -> "GeneratingSet":
        return cls(group, tuple(group.generators()), symmetric, "standard")

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, g):
        return g in self.elements

    def union(self, other: Iterable[Element], label: str = "") -> "GeneratingSet":
        return GeneratingSet(self.group, self.elements + tuple(other), self.symmetric, label or self.label)

    def payloads(self, directed: bool = False) -> list:
        out = [g.payload for g in self.elements]
        if not directed and not self.symmetric:
            for g in self.elements:
                inv = self.group.inv(g.payload)
                if inv not in out:
                    out.append(inv)
        return out

    def __str__(self):
        return "{" + ", ".join(map(str, self.elements)) + "}"


def _closed_form_length(S: GeneratingSet, directed: bool):
    """Word length without BFS for standard symmetric generating sets of free,
    free abelian and cyclic groups."""
    from .groups import FiniteCyclic, FreeAbelian, FreeGroup

    g = S.group
    if directed and not _is_closed(S):
        return None
    std = set(GeneratingSet.standard(g).elements)
    if set(S.elements) != std:
        return None
    if isinstance(g, FreeGroup):
        return len
    if isinstance(g, FreeAbelian):
        return lambda p: sum(abs(a) for a in p)
    if isinstance(g, FiniteCyclic):
        m = g.modulus
        return lambda p: min(p, m - p)
    return None


def _is_closed(S: GeneratingSet) -> bool:
    return all(x.inverse() in S.elements for x in S.elements)


class WordMetric:
    """Lazily grown BFS ball around the identity, used as a word-length oracle.

    ``length`` grows the ball one layer at a time until the element is found or
    the requested radius is complete.  Nothing is committed from a layer that
    would exceed ``cap``.
    """

    def __init__(self, S: GeneratingSet, directed: bool = False, cap: int | None = None):
        self.S = S
        self.group = S.group
        self.directed = directed
        self.cap = DEFAULT_CAP if cap is None else cap
        self.gens = S.payloads(directed)
        e = self.group.identity_payload
        self.dist: dict = {e: 0}
        self.layers: list[list] = [[e]]
        self.exhausted = False
        self.closed_form = _closed_form_length(S, directed)

    @property
    def radius(self) -> int:
        return len(self.layers) - 1

    def extend(self) -> bool:
        if self.exhausted:
            self.layers.append([])
            return False
        mul, dist, gens = self.group.mul, self.dist, self.gens
        budget = self.cap - len(dist)
        new: dict = {}
        for p in self.layers[-1]:
            for s in gens:
                q = mul(p, s)
                if q not in dist and q not in new:
                    new[q] = None
                    if len(new) > budget:
                        raise CapExceeded(self.radius, len(dist), self.cap)
        d = len(self.layers)
        for q in new:
            dist[q] = d
        self.layers.append(list(new))
        if not new:
            self.exhausted = True
        return bool(new)

    def ensure(self, r: int) -> None:
        while self.radius < r:
            if self.exhausted:
                self.layers.extend([] for _ in range(r - self.radius))
                return
            self.extend()

    def length_payload(self, p, r_max: int) -> int:
        if self.closed_form is not None:
            d = self.closed_form(p)
            return d if d <= r_max else AtLeast(r_max + 1)
        dist = self.dist
        while p not in dist and self.radius < r_max and not self.exhausted:
            self.extend()
        d = dist.get(p)
        if d is None or d > r_max:
            return AtLeast(r_max + 1)
        return d

    def length(self, g: Element, r_max: int) -> int:
        return self.length_payload(g.payload, r_max)

    def exact_length(self, g: Element) -> int:
        if self.closed_form is not None:
            return self.closed_form(g.payload)
        while g.payload not in self.dist:
            if self.exhausted:
                raise GroupError(f"{g} is not generated by {self.S}")
            self.extend()
        return self.dist[g.payload]

    def distance(self, x: Element, y: Element, r_max: int) -> int:
        return self.length_payload(self.group.mul(self.group.inv(x.payload), y.payload), r_max)

    def ball_payloads(self, r: int) -> list:
        self.ensure(r)
        return [p for layer in self.layers[: r + 1] for p in layer]

    def sizes(self, r: int) -> list[int]:
        self.ensure(r)
        out, total = [], 0
        for layer in self.layers[: r + 1]:
            total += len(layer)
            out.append(total)
        return out


@dataclass
class Ball:
    center: Element
    radius: int
    distances: dict[Element, int]
    generating_set: GeneratingSet
    directed: bool = False

    def __len__(self):
        return len(self.distances)

    def __contains__(self, g):
        return g in self.distances

    def sizes(self) -> list[int]:
        counts = [0] * (self.radius + 1)
        for d in self.distances.values():
            counts[d] += 1
        out, total = [], 0
        for c in counts:
            total += c
            out.append(total)
        return out

    def sphere(self, k: int) -> list[Element]:
        return sorted(g for g, d in self.distances.items() if d == k)

    def sorted_elements(self) -> list[Element]:
        return sorted(self.distances)

    def to_dict(self) -> dict:
        return {
            "group": self.center.group.descriptor(),
            "generators": [str(s) for s in self.generating_set],
            "center": str(self.center),
            "radius": self.radius,
            "directed": self.directed,
            "sizes": self.sizes(),
            "elements": [{"element": str(g), "distance": self.distances[g]} for g in self.sorted_elements()],
        }


def enumerate_ball(
    group: Group,
    S: GeneratingSet,
    r: int,
    cap: int | None = None,
    directed: bool = False,
    center: Element | None = None,
) -> Ball:
    """Breadth-first ball of radius ``r`` around ``center`` (default identity).

    Edges are right multiplications by ``S``; with ``directed`` no inverses are
    added.  Raises :class:`CapExceeded` carrying the largest complete ball.
    """
    if S.group != group:
        raise GroupError(f"generating set lives in {S.group.descriptor()}, not {group.descriptor()}")
    if r < 0:
        raise ValueError("radius must be non-negative")
    center = group.identity() if center is None else center
    if center.group != group:
        raise GroupError("center is not in the group")
    metric = WordMetric(S, directed=directed, cap=cap)

    def snapshot(radius: int) -> Ball:
        c = center.payload
        mul = group.mul
        dist = {Element(group, mul(c, p)): metric.dist[p] for p in metric.ball_payloads(radius)}
        return Ball(center, radius, dist, S, directed)

    try:
        metric.ensure(r)
    except CapExceeded as exc:
        exc.ball = snapshot(exc.radius)
        raise
    return snapshot(r)


def word_length(group: Group, S: GeneratingSet, g: Element, r_max: int, cap: int | None = None, directed: bool = False) -> int:
    """Exact ``||g||_S`` when at most ``r_max``, else ``AtLeast(r_max + 1)``."""
    if r_max < 0:
        raise ValueError("r_max must be non-negative")
    if S.group != group or g.group != group:
        raise GroupError("family mismatch")
    return WordMetric(S, directed=directed, cap=cap).length(g, r_max)


@dataclass
class GrowthReport:
    sizes: list[int]
    rate_estimates: list[float]
    log_slope: float
    k_max: int
    truncated: bool = False
    window: list[int] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return math.exp(self.log_slope)

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "sizes": self.sizes,
            "rate_estimates": [round(x, 12) for x in self.rate_estimates],
            "log_slope": round(self.log_slope, 12),
            "window": self.window,
            "truncated": self.truncated,
        }


def growth_report(group: Group, S: GeneratingSet, k_max: int, cap: int | None = None) -> GrowthReport:
    """Ball sizes ``#B(0..k_max)``, per-radius roots ``#B(k)^(1/k)`` and the
    least-squares slope of ``ln #B(k)`` over the last ``ceil(k_max/2)`` radii."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if S.group != group:
        raise GroupError("family mismatch")
    metric = WordMetric(S, cap=cap)
    truncated = False
    try:
        sizes = metric.sizes(k_max)
    except CapExceeded as exc:
        truncated = True
        sizes = metric.sizes(exc.radius)
    reached = len(sizes) - 1
    rates = [sizes[k] ** (1.0 / k) for k in range(1, reached + 1)]
    m = math.ceil(k_max / 2)
    window = list(range(max(1, reached - m + 1), reached + 1)) if reached >= 1 else []
    if len(window) >= 2:
        slope = statistics.linear_regression(window, [math.log(sizes[k]) for k in window]).slope
    elif window:
        slope = math.log(sizes[window[0]]) / window[0]
    else:
        slope = 0.0
    return GrowthReport(sizes, rates, slope, k_max, truncated, window)


def check_subgroup(elements: Sequence[Element]) -> None:
    """Raise unless ``elements`` is closed under products and inverses."""
    hset = set(elements)
    if not hset:
        raise GroupError("empty subgroup")
    for x in hset:
        if x.inverse() not in hset:
            raise GroupError(f"closure violation: inverse of {x} missing")
        for y in hset:
            if x * y not in hset:
                raise GroupError(f"closure violation: {x}*{y} missing")


def subgroup_diameter(group: Group, S: GeneratingSet, H_elements: Sequence[Element], cap: int | None = None) -> int:
    """Largest ``d_S`` distance between two elements of the finite subgroup."""
    check_subgroup(H_elements)
    metric = WordMetric(S, cap=cap)
    hs = sorted(set(H_elements))
    # d(x, y) = ||x^-1 y|| and x^-1 y runs over H itself.
    return max(metric.exact_length(h) for h in hs)


def generate_subgroup(group: Group, gens: Iterable[Element], cap: int = 100_000) -> list[Element]:
    """All elements of the (finite) subgroup generated by ``gens``."""
    gens = [g for g in gens if not g.is_identity()]
    if not gens:
        return [group.identity()]
    metric = WordMetric(GeneratingSet(group, tuple(gens)), cap=cap)
    while not metric.exhausted:
        metric.extend()
    return sorted(Element(group, p) for p in metric.dist)


def multi_source_distances(
    S: GeneratingSet,
    sources: Iterable,
    targets: Iterable,
    r_max: int,
    cap: int | None = None,
) -> tuple[int, object]:
    """Max over targets of the distance to the nearest source (payloads).

    Returns ``(defect, worst_target_payload)``; the defect is ``AtLeast`` when
    some target is not reached within ``r_max``.
    """
    group = S.group
    cap = DEFAULT_CAP if cap is None else cap
    gens = S.payloads()
    mul = group.mul
    dist = {}
    frontier = []
    for p in sources:
        if p not in dist:
            dist[p] = 0
            frontier.append(p)
    remaining = set(targets)
    worst, worst_t = 0, None
    d = 0
    for p in frontier:
        if p in remaining:
            remaining.discard(p)
            worst_t = worst_t if worst_t is not None else p
    while remaining and d < r_max and frontier:
        d += 1
        new = []
        for p in frontier:
            for s in gens:
                q = mul(p, s)
                if q not in dist:
                    dist[q] = d
                    new.append(q)
                    if q in remaining:
                        remaining.discard(q)
                        worst, worst_t = d, q
        if len(dist) > cap:
            raise CapExceeded(d - 1, len(dist), cap)
        frontier = new
    if remaining:
        return AtLeast(d + 1), min(remaining, key=group.order_key)
    return worst, worst_t


# ---------------------------------------------------------------------------
# export


def ball_to_dot(ball: Ball) -> str:
    """DOT digraph: one node per element (canonical text, sorted), one edge
    ``x -> x*s`` labelled with the 1-based generator index for each ``s``
    keeping the product inside the ball."""
    elems = ball.sorted_elements()
    gens = list(ball.generating_set.elements)
    if not ball.directed and not ball.generating_set.symmetric:
        gens += [g.inverse() for g in gens if g.inverse() not in gens]
    lines = ["digraph cayley {"]
    for g in elems:
        lines.append(f'  "{g}" [distance={ball.distances[g]}];')
    for g in elems:
        for i, s in enumerate(gens, start=1):
            h = g * s
            if h in ball.distances:
                lines.append(f'  "{g}" -> "{h}" [label="{i}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def ball_to_csv(ball: Ball) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["element", "distance"])
    for g in ball.sorted_elements():
        w.writerow([str(g), ball.distances[g]])
    return buf.getvalue()
