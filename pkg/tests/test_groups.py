import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from coarsegroups.groups import (
    DirectProduct,
    Element,
    FiniteCyclic,
    FreeAbelian,
    FreeGroup,
    GroupError,
    conjugate,
    evaluate_word,
    kernel_to_cyclic,
    parse_group,
)

LETTERS = {1: "a", -1: "A", 2: "b", -2: "B", 3: "c", -3: "C"}
CODES = {v: k for k, v in LETTERS.items()}


def to_text(payload):
    return "".join(LETTERS[x] for x in payload)


def from_text(F, word):
    return Element(F, tuple(CODES[c] for c in word))


free_words = st.text(alphabet="aAbB", max_size=12)


def _word_product(F, w):
    out = F.identity()
    for c in w:
        out = out * Element(F, (CODES[c],))
    return out


GROUP_STRATEGIES = {
    "free(2)": lambda G: free_words.map(lambda w: _word_product(G, w)),
    "zn(2)": lambda G: st.tuples(st.integers(-20, 20), st.integers(-20, 20)).map(G.element),
    "cyclic(7)": lambda G: st.integers(0, 6).map(G.element),
    "product(z, cyclic(3))": lambda G: st.tuples(st.tuples(st.integers(-9, 9)), st.integers(0, 2)).map(G.element),
    "semidirect(z, cyclic(4), action=inversion)": lambda G: st.tuples(st.tuples(st.integers(-9, 9)), st.integers(0, 3)).map(G.element),
    "semidirect(cyclic(3), cyclic(2), action=inversion)": lambda G: st.sampled_from(G.elements()),
    "product(free(2), cyclic(2))": lambda G: st.tuples(free_words.map(lambda w: tuple(CODES[c] for c in oracles.reduce_word(w))), st.integers(0, 1)).map(G.element),
}


@pytest.mark.parametrize("desc", sorted(GROUP_STRATEGIES))
def test_associativity(desc):
    G = parse_group(desc)
    elem = GROUP_STRATEGIES[desc](G)

    @settings(max_examples=1000)
    @given(elem, elem, elem)
    def check(x, y, z):
        assert (x * y) * z == x * (y * z)
        assert x * x.inverse() == G.identity()
        assert x * G.identity() == x == G.identity() * x

    check()


@given(free_words)
def test_free_reduction_matches_stack_oracle(word):
    F = FreeGroup(2)
    g = _word_product(F, word)
    assert to_text(g.payload) == oracles.reduce_word(word)


@given(free_words, st.integers(0, 12))
def test_free_reduction_is_confluent(word, cut):
    # reducing a prefix first must give the same normal form
    F = FreeGroup(2)
    cut = min(cut, len(word))
    left = _word_product(F, word[:cut])
    right = _word_product(F, word[cut:])
    assert left * right == _word_product(F, word)
    assert to_text((left * right).payload) == oracles.reduce_word(oracles.reduce_word(word[:cut]) + word[cut:])


@given(p=st.tuples(st.integers(-9, 9), st.integers(0, 3)), q=st.tuples(st.integers(-9, 9), st.integers(0, 3)))
def test_semidirect_matches_hand_formula(p, q, z_c4):
    x = z_c4.element(((p[0],), p[1]))
    y = z_c4.element(((q[0],), q[1]))
    v, t = oracles.semidirect_z_c4_mul(p, q)
    assert (x * y).payload == ((v,), t)


def test_semidirect_action_is_homomorphism(z_c4):
    S3 = parse_group("semidirect(cyclic(3), cyclic(2), action=inversion)")
    for G, mod in ((z_c4, None), (S3, 3)):
        ts = G.finite.element_payloads()
        for t1, t2 in itertools.product(ts, repeat=2):
            a, b = G.alpha(t1), G.alpha(t2)
            prod = tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b))) for i in range(len(a)))
            if mod:
                prod = tuple(tuple(x % mod for x in row) for row in prod)
            assert G.alpha(G.finite.mul(t1, t2)) == prod


def test_s3_is_nonabelian_of_order_six():
    S3 = parse_group("semidirect(cyclic(3), cyclic(2), action=inversion)")
    assert S3.order == 6
    assert not S3.is_abelian
    r, s = S3.parse("(1,0)"), S3.parse("(0,1)")
    assert conjugate(r, s) == r.inverse()


@pytest.mark.parametrize(
    "desc",
    [
        "z",
        "zn(3)",
        "free(3)",
        "cyclic(5)",
        "product(z, cyclic(3))",
        "product(free(2), cyclic(2))",
        "central(free(2), z)",
        "semidirect(z, cyclic(4), action=inversion)",
    ],
)
def test_descriptor_round_trip(desc):
    G = parse_group(desc)
    assert parse_group(G.descriptor()) == G
    for g in G.generators():
        assert G.parse(str(g)) == g
        assert G.parse(str(g.inverse())) == g.inverse()


def test_text_formats():
    F = FreeGroup(2)
    assert str(F.parse("aB")) == "a1B1"
    assert F.parse("a2B1").payload == (1, 1, -2)
    assert F.parse("e").is_identity()
    assert str(parse_group("zn(2)").parse("(1,-2)")) == "(1,-2)"
    assert [str(g) for g in parse_group("product(free(2), cyclic(2))").generators()] == ["(a1,0)", "(b1,0)", "(e,1)"]


@pytest.mark.parametrize("bad", ["foo(3)", "product(z)", "free(x)", "semidirect(free(2), cyclic(2))", "central(free(2), cyclic(2))"])
def test_bad_descriptors(bad):
    with pytest.raises(GroupError):
        parse_group(bad)


def test_family_mismatch_is_rejected():
    with pytest.raises(GroupError):
        FreeGroup(2).generators()[0] * FreeAbelian(2).generators()[0]


def test_finite_elements_are_sorted():
    G = parse_group("product(cyclic(2), cyclic(3))")
    elems = G.elements()
    assert elems == sorted(elems)
    assert len(elems) == G.order == 6
    assert FiniteCyclic(4).elements()[0].is_identity()


def test_direct_product_commutes_factorwise():
    G = DirectProduct(FreeGroup(2), FiniteCyclic(2))
    a, b, t = G.generators()
    assert a * t == t * a
    assert a * b != b * a


def test_evaluate_word():
    F = FreeGroup(2)
    a, b = F.generators()
    assert evaluate_word(F, [a, b], [(1, 3), (0, -1)]) == b ** 3 * a.inverse()


# ---------------------------------------------------------------------------
# the index-3 embedding


def test_schreier_images(schreier):
    assert [str(x) for x in schreier.generator_images] == ["a3", "b1", "a1b1A1", "a2b1A2"]
    assert schreier.index == 3
    assert schreier.domain.rank == 4


@given(word=st.lists(st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4]), max_size=10))
def test_schreier_rewrite_inverts_image(word, schreier):
    F4 = schreier.domain
    w = F4.identity()
    for x in word:
        w = w * Element(F4, (x,))
    img = schreier.image(w)
    assert schreier.preimage(img) == w
    # exponent sum in a is divisible by the index on the image
    assert sum(1 if x == 1 else -1 for x in img.payload if abs(x) == 1) % 3 == 0


def test_schreier_cosets_cover_ball(schreier):
    F = schreier.codomain
    ball = oracles.free_ball(["a", "b"], 8)
    classes = set()
    for word in ball:
        g = from_text(F, word)
        t = schreier.coset_representative(g)
        h = g * t.inverse()
        # g t^-1 lies in the image, so rewriting succeeds and maps back
        assert schreier.image(schreier.preimage(h)) == h
        classes.add(t)
    assert len(classes) == 3


def test_rewrite_rejects_outside_element(schreier):
    with pytest.raises(GroupError):
        schreier.preimage(schreier.codomain.parse("a1"))


def test_kernel_to_cyclic_rank():
    emb = kernel_to_cyclic(3, 2)
    assert emb.domain.rank == 1 + 2 * 2
    for g in emb.generator_images:
        assert emb.preimage(g) in emb.domain.generators()
