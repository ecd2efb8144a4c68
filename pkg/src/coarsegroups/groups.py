"""Concrete finitely generated groups with unique normal forms.

Every group is an immutable, hashable descriptor.  Group elements are
:class:`Element` values pairing a descriptor with a family-specific payload:

* ``FreeGroup(n)``: tuple of signed generator indices (freely reduced word)
* ``FreeAbelian(n)``: integer tuple of length ``n``
* ``FiniteCyclic(m)``: residue in ``range(m)``
* ``DirectProduct(A, B)`` / ``CentralProduct``: pair of payloads
* ``SemidirectProduct(N, F, action)``: pair ``(v, t)`` with
  ``(v1, t1)(v2, t2) = (v1 + action(t1) v2, t1 t2)``
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

Payload = Any

# 'e' is reserved for the identity word.
LETTERS = "abcdfghijklmnopqrstuvwxyz"


class GroupError(ValueError):
    """Raised on family mismatches and malformed elements."""


class Element:
    """A group element in normal form.

    Equality is equality of normal forms inside the same group; the hash only
    looks at the payload so that large BFS tables stay cheap.
    """

    __slots__ = ("group", "payload")

    def __init__(self, group: "Group", payload: Payload):
        self.group = group
        self.payload = payload

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.payload == other.payload and (
            self.group is other.group or self.group == other.group
        )

    def __hash__(self):
        return hash(self.payload)

    def __lt__(self, other: "Element"):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (self.group.tag, self.group.order_key(self.payload))

    def __mul__(self, other: "Element") -> "Element":
        return multiply(self, other)

    def __pow__(self, k: int) -> "Element":
        return power(self, k)

    def inverse(self) -> "Element":
        return invert(self)

    def is_identity(self) -> bool:
        return self.payload == self.group.identity_payload

    def __str__(self):
        return self.group.format_payload(self.payload)

    def __repr__(self):
        return f"<{self.group.descriptor()}: {self}>"


def _check_same(a: Element, b: Element) -> None:
    if not (a.group is b.group or a.group == b.group):
        raise GroupError(
            f"family mismatch: {a.group.descriptor()} vs {b.group.descriptor()}"
        )


def multiply(a: Element, b: Element) -> Element:
    _check_same(a, b)
    return Element(a.group, a.group.mul(a.payload, b.payload))


def invert(a: Element) -> Element:
    return Element(a.group, a.group.inv(a.payload))


def power(a: Element, k: int) -> Element:
    g = a.group
    base = a.payload if k >= 0 else g.inv(a.payload)
    k = abs(k)
    result = g.identity_payload
    while k:
        if k & 1:
            result = g.mul(result, base)
        base = g.mul(base, base)
        k >>= 1
    return Element(g, result)


def conjugate(x: Element, y: Element) -> Element:
    """``x^y = y^-1 x y``."""
    return y.inverse() * x * y


def _split_top(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


def _strip_parens(text: str) -> str:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        depth = 0
        for i, ch in enumerate(text):
            depth += ch == "("
            depth -= ch == ")"
            if depth == 0 and i < len(text) - 1:
                return text
        return text[1:-1].strip()
    return text


class Group:
    """Base class for group descriptors.  Subclasses work on raw payloads."""

    tag: str = "group"
    identity_payload: Payload

    # payload level ------------------------------------------------------
    def mul(self, p: Payload, q: Payload) -> Payload:
        raise NotImplementedError

    def inv(self, p: Payload) -> Payload:
        raise NotImplementedError

    def format_payload(self, p: Payload) -> str:
        raise NotImplementedError

    def parse_payload(self, text: str) -> Payload:
        raise NotImplementedError

    def order_key(self, p: Payload):
        return p

    def generator_payloads(self) -> list[Payload]:
        raise NotImplementedError

    def word(self, p: Payload) -> list[tuple[int, int]]:
        """Express ``p`` as ``[(generator index, exponent), ...]`` in the
        standard generators."""
        raise NotImplementedError

    def descriptor(self) -> str:
        raise NotImplementedError

    # element level ------------------------------------------------------
    @property
    def is_finite(self) -> bool:
        return False

    @property
    def order(self) -> int | None:
        return None

    def element_payloads(self) -> list[Payload]:
        raise GroupError(f"{self.descriptor()} is infinite")

    def identity(self) -> Element:
        return Element(self, self.identity_payload)

    def element(self, payload: Payload) -> Element:
        return Element(self, payload)

    def parse(self, text: str) -> Element:
        try:
            return Element(self, self.parse_payload(str(text).strip()))
        except GroupError:
            raise
        except (ValueError, IndexError) as exc:
            raise GroupError(f"cannot parse {text!r} in {self.descriptor()}") from exc

    def generators(self) -> list[Element]:
        return [Element(self, p) for p in self.generator_payloads()]

    def elements(self) -> list[Element]:
        return sorted(Element(self, p) for p in self.element_payloads())

    @property
    def is_abelian(self) -> bool:
        return False

    def __str__(self):
        return self.descriptor()


@dataclass(frozen=True)
class FreeGroup(Group):
    rank: int
    tag = "free"

    def __post_init__(self):
        if not 0 <= self.rank <= len(LETTERS):
            raise GroupError(f"free group rank must be in 0..{len(LETTERS)}")

    @property
    def identity_payload(self):
        return ()

    def mul(self, p, q):
        i, n = 0, min(len(p), len(q))
        lp = len(p)
        while i < n and p[lp - 1 - i] == -q[i]:
            i += 1
        if i == 0:
            return p + q
        return p[: lp - i] + q[i:]

    def inv(self, p):
        return tuple(-x for x in reversed(p))

    def order_key(self, p):
        return (len(p), p)

    def generator_payloads(self):
        return [(k,) for k in range(1, self.rank + 1)]

    def word(self, p):
        out: list[tuple[int, int]] = []
        for x in p:
            idx, s = abs(x) - 1, 1 if x > 0 else -1
            if out and out[-1][0] == idx:
                out[-1] = (idx, out[-1][1] + s)
            else:
                out.append((idx, s))
        return out

    def format_payload(self, p):
        if not p:
            return "e"
        runs = []
        for x, grp in itertools.groupby(p):
            letter = LETTERS[abs(x) - 1]
            runs.append(f"{letter if x > 0 else letter.upper()}{len(list(grp))}")
        return "".join(runs)

    def parse_payload(self, text):
        text = text.replace(" ", "").replace("*", "")
        if text in ("e", "", "1"):
            return ()
        if not re.fullmatch(r"([a-zA-Z](\^-?\d+|\d+)?)+", text):
            raise GroupError(f"bad word {text!r}")
        word = ()
        for letter, exp in re.findall(r"([a-zA-Z])(\^-?\d+|\d+)?", text):
            k = LETTERS.find(letter.lower())
            if k < 0 or k >= self.rank:
                raise GroupError(f"letter {letter!r} not a generator of {self.descriptor()}")
            n = int(exp.lstrip("^")) if exp else 1
            sign = 1 if letter.islower() else -1
            if n < 0:
                sign, n = -sign, -n
            for _ in range(n):
                word = self.mul(word, (sign * (k + 1),))
        return word

    def descriptor(self):
        return f"free({self.rank})"

    @property
    def is_finite(self):
        return self.rank == 0

    @property
    def order(self):
        return 1 if self.rank == 0 else None

    def element_payloads(self):
        if self.rank:
            return super().element_payloads()
        return [()]

    @property
    def is_abelian(self):
        return self.rank <= 1


@dataclass(frozen=True)
class FreeAbelian(Group):
    rank: int
    tag = "zn"

    @property
    def identity_payload(self):
        return (0,) * self.rank

    def mul(self, p, q):
        return tuple(a + b for a, b in zip(p, q))

    def inv(self, p):
        return tuple(-a for a in p)

    def generator_payloads(self):
        return [tuple(int(i == j) for i in range(self.rank)) for j in range(self.rank)]

    def word(self, p):
        return [(i, a) for i, a in enumerate(p) if a]

    def format_payload(self, p):
        if self.rank == 1:
            return str(p[0])
        return "(" + ",".join(map(str, p)) + ")"

    def parse_payload(self, text):
        parts = [s for s in _split_top(_strip_parens(text)) if s != ""]
        if len(parts) != self.rank:
            raise GroupError(f"expected {self.rank} integers, got {text!r}")
        return tuple(int(s) for s in parts)

    def descriptor(self):
        return "z" if self.rank == 1 else f"zn({self.rank})"

    @property
    def is_abelian(self):
        return True


@dataclass(frozen=True)
class FiniteCyclic(Group):
    modulus: int
    tag = "cyclic"

    def __post_init__(self):
        if self.modulus < 1:
            raise GroupError("cyclic group order must be >= 1")

    @property
    def identity_payload(self):
        return 0

    def mul(self, p, q):
        return (p + q) % self.modulus

    def inv(self, p):
        return -p % self.modulus

    def generator_payloads(self):
        return [1] if self.modulus > 1 else []

    def word(self, p):
        return [(0, p)] if p else []

    def format_payload(self, p):
        return str(p)

    def parse_payload(self, text):
        return int(_strip_parens(text)) % self.modulus

    def descriptor(self):
        return f"cyclic({self.modulus})"

    @property
    def is_finite(self):
        return True

    @property
    def order(self):
        return self.modulus

    def element_payloads(self):
        return list(range(self.modulus))

    @property
    def is_abelian(self):
        return True


@dataclass(frozen=True)
class DirectProduct(Group):
    left: Group
    right: Group
    tag = "product"

    @property
    def identity_payload(self):
        return (self.left.identity_payload, self.right.identity_payload)

    def mul(self, p, q):
        return (self.left.mul(p[0], q[0]), self.right.mul(p[1], q[1]))

    def inv(self, p):
        return (self.left.inv(p[0]), self.right.inv(p[1]))

    def order_key(self, p):
        return (self.left.order_key(p[0]), self.right.order_key(p[1]))

    def generator_payloads(self):
        le, re_ = self.left.identity_payload, self.right.identity_payload
        return [(g, re_) for g in self.left.generator_payloads()] + [
            (le, g) for g in self.right.generator_payloads()
        ]

    def word(self, p):
        shift = len(self.left.generator_payloads())
        return self.left.word(p[0]) + [(i + shift, k) for i, k in self.right.word(p[1])]

    def format_payload(self, p):
        return f"({self.left.format_payload(p[0])},{self.right.format_payload(p[1])})"

    def parse_payload(self, text):
        parts = _split_top(_strip_parens(text))
        if len(parts) != 2:
            raise GroupError(f"expected a pair, got {text!r}")
        return (self.left.parse_payload(parts[0]), self.right.parse_payload(parts[1]))

    def descriptor(self):
        return f"product({self.left.descriptor()}, {self.right.descriptor()})"

    @property
    def is_finite(self):
        return self.left.is_finite and self.right.is_finite

    @property
    def order(self):
        if self.is_finite:
            return self.left.order * self.right.order
        return None

    def element_payloads(self):
        return [
            (a, b)
            for a in self.left.element_payloads()
            for b in self.right.element_payloads()
        ]

    @property
    def is_abelian(self):
        return self.left.is_abelian and self.right.is_abelian


@dataclass(frozen=True)
class CentralProduct(DirectProduct):
    """Free group times a central infinite cyclic factor, ``F_n x Z``."""

    tag = "central"

    def __init__(self, rank: int):
        object.__setattr__(self, "left", FreeGroup(rank))
        object.__setattr__(self, "right", FreeAbelian(1))

    def descriptor(self):
        return f"central(free({self.left.rank}), z)"


def _matmul(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0])))
        for i in range(len(a))
    )


def _identity_matrix(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _reduce_matrix(m, modulus):
    if modulus is None:
        return m
    return tuple(tuple(x % modulus for x in row) for row in m)


@dataclass(frozen=True)
class SemidirectProduct(Group):
    """``N x| F`` for ``N`` free abelian or finite cyclic and ``F`` a finite
    cyclic group or a direct product of such.

    ``action`` holds one integer matrix per cyclic factor of ``F``: the image
    of that factor's generator.  ``action_name`` is the descriptor keyword.
    """

    normal: Group
    finite: Group
    action: tuple
    action_name: str = "custom"
    tag = "semidirect"
    _table: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.normal, (FreeAbelian, FiniteCyclic)):
            raise GroupError("normal part must be zn(n) or cyclic(m)")
        factors = _cyclic_factors(self.finite)
        if factors is None:
            raise GroupError("finite part must be cyclic or a product of cyclic groups")
        if len(self.action) != len(factors):
            raise GroupError("need one action matrix per cyclic factor")
        dim = self._dim
        mod = self._mod
        mats = [_reduce_matrix(tuple(tuple(r) for r in m), mod) for m in self.action]
        for m, order in zip(mats, factors):
            if len(m) != dim or any(len(r) != dim for r in m):
                raise GroupError("action matrix has wrong shape")
            acc = _identity_matrix(dim)
            for _ in range(order):
                acc = _reduce_matrix(_matmul(acc, m), mod)
            if acc != _reduce_matrix(_identity_matrix(dim), mod):
                raise GroupError("action matrix order does not divide the factor order")
        for a, b in itertools.combinations(mats, 2):
            if _reduce_matrix(_matmul(a, b), mod) != _reduce_matrix(_matmul(b, a), mod):
                raise GroupError("action matrices must commute")
        table = {}
        for t in self.finite.element_payloads():
            exps = _flatten_product_payload(t) if len(factors) > 1 else (t,)
            acc = _identity_matrix(dim)
            for m, k in zip(mats, exps):
                for _ in range(k):
                    acc = _reduce_matrix(_matmul(acc, m), mod)
            table[t] = acc
        object.__setattr__(self, "_table", table)

    @property
    def _dim(self):
        return self.normal.rank if isinstance(self.normal, FreeAbelian) else 1

    @property
    def _mod(self):
        return self.normal.modulus if isinstance(self.normal, FiniteCyclic) else None

    def alpha(self, t: Payload):
        """Integer matrix by which the finite-part payload ``t`` acts."""
        return self._table[t]

    def act(self, t, v):
        m = self._table[t]
        if self._mod is not None:
            return (m[0][0] * v) % self._mod
        return tuple(sum(r[j] * v[j] for j in range(len(v))) for r in m)

    @property
    def identity_payload(self):
        return (self.normal.identity_payload, self.finite.identity_payload)

    def mul(self, p, q):
        return (
            self.normal.mul(p[0], self.act(p[1], q[0])),
            self.finite.mul(p[1], q[1]),
        )

    def inv(self, p):
        tinv = self.finite.inv(p[1])
        return (self.normal.inv(self.act(tinv, p[0])), tinv)

    def order_key(self, p):
        return (self.normal.order_key(p[0]), self.finite.order_key(p[1]))

    def generator_payloads(self):
        ne, fe = self.normal.identity_payload, self.finite.identity_payload
        return [(g, fe) for g in self.normal.generator_payloads()] + [
            (ne, g) for g in self.finite.generator_payloads()
        ]

    def word(self, p):
        shift = len(self.normal.generator_payloads())
        return self.normal.word(p[0]) + [(i + shift, k) for i, k in self.finite.word(p[1])]

    def format_payload(self, p):
        return f"({self.normal.format_payload(p[0])},{self.finite.format_payload(p[1])})"

    def parse_payload(self, text):
        parts = _split_top(_strip_parens(text))
        if len(parts) != 2:
            raise GroupError(f"expected a pair, got {text!r}")
        return (self.normal.parse_payload(parts[0]), self.finite.parse_payload(parts[1]))

    def descriptor(self):
        if self.action_name == "custom":
            mats = [[list(r) for r in m] for m in self.action]
            act = str(mats[0] if len(mats) == 1 else mats).replace(" ", "")
        else:
            act = self.action_name
        return f"semidirect({self.normal.descriptor()}, {self.finite.descriptor()}, action={act})"

    @property
    def is_finite(self):
        return self.normal.is_finite

    @property
    def order(self):
        return self.normal.order * self.finite.order if self.is_finite else None

    def element_payloads(self):
        return [(v, t) for v in self.normal.element_payloads() for t in self.finite.element_payloads()]

    @property
    def is_abelian(self):
        ident = _reduce_matrix(_identity_matrix(self._dim), self._mod)
        return self.finite.is_abelian and all(m == ident for m in self._table.values())


def _cyclic_factors(g: Group) -> list[int] | None:
    if isinstance(g, FiniteCyclic):
        return [g.modulus]
    if isinstance(g, DirectProduct) and not isinstance(g, CentralProduct):
        a, b = _cyclic_factors(g.left), _cyclic_factors(g.right)
        if a is None or b is None:
            return None
        return a + b
    return None


def _flatten_product_payload(t) -> tuple:
    if isinstance(t, tuple):
        return tuple(x for part in t for x in _flatten_product_payload(part))
    return (t,)


def semidirect(normal: Group, finite: Group, action: str | Sequence = "inversion") -> SemidirectProduct:
    """Build a semidirect product with a named or explicit action.

    Named actions: ``inversion`` (every factor generator acts by ``-1``),
    ``trivial``, and ``swap`` (coordinate exchange, ``zn(2)`` only).
    """
    factors = _cyclic_factors(finite)
    if factors is None:
        raise GroupError("finite part must be cyclic or a product of cyclic groups")
    dim = normal.rank if isinstance(normal, FreeAbelian) else 1
    if isinstance(action, str):
        name = action
        if name == "inversion":
            mats = [tuple(tuple(-int(i == j) for j in range(dim)) for i in range(dim))] * len(factors)
        elif name == "trivial":
            mats = [_identity_matrix(dim)] * len(factors)
        elif name == "swap":
            if dim != 2:
                raise GroupError("swap action needs zn(2)")
            mats = [((0, 1), (1, 0))] * len(factors)
        else:
            raise GroupError(f"unknown action {action!r}")
    else:
        name = "custom"
        arr = list(action)
        if arr and not isinstance(arr[0][0], (list, tuple)):
            arr = [arr]
        mats = [tuple(tuple(int(x) for x in row) for row in m) for m in arr]
    return SemidirectProduct(normal, finite, tuple(mats), name)


def evaluate_word(codomain: Group, images: Sequence[Element], word: Iterable[tuple[int, int]]) -> Element:
    result = codomain.identity()
    for idx, k in word:
        result = result * power(images[idx], k)
    return result


# ---------------------------------------------------------------------------
# descriptors


def parse_group(text: str) -> Group:
    """Parse a group descriptor such as ``semidirect(z, cyclic(4), action=inversion)``."""
    text = text.strip()
    m = re.fullmatch(r"([a-z]+)\s*(?:\((.*)\))?", text, flags=re.S)
    if not m:
        raise GroupError(f"bad group descriptor {text!r}")
    name, inner = m.group(1), m.group(2)
    args = _split_top(inner) if inner is not None and inner.strip() else []
    try:
        if name == "z" and not args:
            return FreeAbelian(1)
        if name == "zn":
            return FreeAbelian(int(args[0]))
        if name == "free":
            return FreeGroup(int(args[0]))
        if name == "cyclic":
            return FiniteCyclic(int(args[0]))
        if name == "product":
            if len(args) < 2:
                raise GroupError("product needs two factors")
            g = parse_group(args[-1])
            for a in reversed(args[:-1]):
                g = DirectProduct(parse_group(a), g)
            return g
        if name == "central":
            free = parse_group(args[0])
            if not isinstance(free, FreeGroup) or len(args) != 2 or parse_group(args[1]) != FreeAbelian(1):
                raise GroupError("central expects central(free(n), z)")
            return CentralProduct(free.rank)
        if name == "semidirect":
            action: Any = "inversion"
            pos = []
            for a in args:
                if a.startswith("action="):
                    raw = a[len("action="):].strip()
                    action = raw if raw[:1].isalpha() else _parse_matrix(raw)
                else:
                    pos.append(a)
            return semidirect(parse_group(pos[0]), parse_group(pos[1]), action)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, GroupError):
            raise
        raise GroupError(f"bad group descriptor {text!r}") from exc
    raise GroupError(f"unknown group family {name!r}")


def _parse_matrix(raw: str):
    import json

    return json.loads(raw)


# ---------------------------------------------------------------------------
# subgroup embeddings


@dataclass(frozen=True)
class SubgroupEmbedding:
    """Injective homomorphism given by the images of the domain generators.

    ``transversal`` and ``rewrite`` are set for finite-index free subgroups,
    where they give the coset representatives and the inverse on the image.
    """

    domain: Group
    codomain: Group
    generator_images: tuple
    index: int | None = None
    rewrite_fn: Any = field(default=None, compare=False, repr=False)
    coset_fn: Any = field(default=None, compare=False, repr=False)

    def image(self, g: Element) -> Element:
        return evaluate_word(self.codomain, self.generator_images, self.domain.word(g.payload))

    def preimage(self, g: Element) -> Element:
        """Inverse of :meth:`image` on the image subgroup."""
        if self.rewrite_fn is None:
            raise GroupError("embedding has no rewriting procedure")
        return self.rewrite_fn(g)

    def coset_representative(self, g: Element) -> Element:
        return self.coset_fn(g)


def kernel_to_cyclic(rank: int, index: int) -> SubgroupEmbedding:
    """Kernel of ``F_rank -> Z/index`` (first generator to 1, the rest to 0).

    Reidemeister-Schreier with transversal ``{a^0, ..., a^(index-1)}`` gives the
    free basis ``a^index`` followed by ``a^c s a^-c`` for every other generator
    ``s`` and ``c = 0..index-1``.
    """
    if rank < 1 or index < 1:
        raise GroupError("need rank >= 1 and index >= 1")
    big = FreeGroup(rank)
    sub_rank = 1 + index * (rank - 1)
    small = FreeGroup(sub_rank)
    a = big.generators()[0]
    images = [a ** index]
    for s in big.generators()[1:]:
        for c in range(index):
            images.append(a ** c * s * a ** (-c))

    def exponent_class(g: Element) -> int:
        return sum(1 if x == 1 else -1 for x in g.payload if abs(x) == 1) % index

    def rewrite(g: Element) -> Element:
        if g.group != big:
            raise GroupError("rewrite expects an element of the ambient free group")
        out: tuple = ()
        c = 0
        for x in g.payload:
            if x == 1:
                if c == index - 1:
                    out = small.mul(out, (1,))
                c = (c + 1) % index
            elif x == -1:
                if c == 0:
                    out = small.mul(out, (-1,))
                c = (c - 1) % index
            else:
                j = abs(x)
                letter = 2 + (j - 2) * index + c
                out = small.mul(out, (letter if x > 0 else -letter,))
        if c != 0:
            raise GroupError(f"{g} is not in the subgroup")
        return Element(small, out)

    def coset(g: Element) -> Element:
        return a ** exponent_class(g)

    return SubgroupEmbedding(small, big, tuple(images), index, rewrite, coset)


def schreier_f4_in_f2() -> SubgroupEmbedding:
    """Index-3 embedding of ``F_4`` into ``F_2 = <a, b>``:
    ``a^3, b, a b a^-1, a^2 b a^-2``."""
    return kernel_to_cyclic(2, 3)
