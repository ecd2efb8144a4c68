import itertools
import math
from functools import reduce

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from coarsegroups.families import (
    FamilyRequest,
    check_semishared_conditions,
    check_theorem_b_conditions,
    family_abelian_z,
    family_free,
    family_parameter_z,
    is_power,
    torsion_obstruction,
    totient,
    verify_property,
)
from coarsegroups.groups import FreeAbelian, FreeGroup, GroupError, parse_group
from coarsegroups.metric import AtLeast, GeneratingSet

Z = FreeAbelian(1)
F = FreeGroup(2)


def zi(n):
    return Z.element((n,))


def ints(S):
    return sorted(s.payload[0] for s in S.elements)


def test_abelian_family_examples():
    fam = family_abelian_z(zi(3), zi(5), 4)
    assert fam.P == 7
    assert ints(fam.S) == [-344, -49, -3, 3, 49, 344]
    assert oracles.int_length(5, [3, 49, 344], 3) is None  # length >= 4
    assert verify_property(fam.S, FamilyRequest(zi(3), zi(5), 4)).passed

    fam = family_abelian_z(zi(0), zi(2), 2)
    assert fam.P == 3
    assert ints(fam.S) == [-28, -9, 9, 28]


def test_abelian_family_swaps_multiples():
    fam = family_abelian_z(zi(2), zi(6), 3)
    # 6 is a multiple of 2, so the roles swap and 6 becomes the member
    assert fam.request.g == zi(6)
    assert 6 in ints(fam.S)


def test_parameter_is_minimal_coprime():
    assert family_parameter_z(4, 3, 5) == 7
    assert family_parameter_z(6, 1, 6) == 7
    assert family_parameter_z(0, 5, 2) == 6


@given(st.integers(-10, 10), st.integers(-10, 10), st.integers(1, 12))
def test_abelian_family_generates_z(g, h, R):
    if g == h or g == -h:
        return
    fam = family_abelian_z(zi(g), zi(h), R)
    vals = ints(fam.S)
    assert reduce(math.gcd, vals) == 1
    assert fam.request.g.payload[0] in vals or fam.request.g.payload[0] == 0


def test_free_family_example():
    a, b = F.generators()
    fam = family_free(a, b, 3)
    assert fam.P == 3
    assert [str(s) for s in fam.S.elements] == ["a1", "A1", "a4b1", "B1A4"]
    assert fam.construction == "formula"
    res = verify_property(fam.S, FamilyRequest(a, b, 3))
    assert res.passed and res.member == "g"
    # oracle: b is not reachable in two steps of {a, a^4 b}
    ball = oracles.free_ball(["a", "aaaab"], 2)
    assert "b" not in ball


def test_free_family_identity_picks_first_usable_letter():
    a, b = F.generators()
    fam = family_free(F.identity(), a * a, 2)
    assert fam.S.elements[0] == b


def test_free_family_sandwich_fallback():
    a, b = F.generators()
    h = b.inverse() * a * b
    req = FamilyRequest(a, h, 4)
    plain = family_free(a, h, 4, fallback=False)
    assert not verify_property(plain.S, req).passed
    # the conjugate is reached in three steps whatever P is
    assert verify_property(plain.S, req).lengths["h"] == 3
    fam = family_free(a, h, 4)
    assert fam.construction == "sandwich"
    assert verify_property(fam.S, req).passed


@given(st.sampled_from(["a1", "b1", "a1b1", "a2", "B1a1", "a1b1A1"]), st.sampled_from(["b1", "a1B1", "b2", "a1b1a1", "e"]), st.integers(1, 5))
def test_free_family_invariants(gt, ht, R):
    g, h = F.parse(gt), F.parse(ht)
    if g == h or g == h.inverse():
        return
    fam = family_free(g, h, R)
    x = fam.S.elements[0]
    assert x in (fam.request.g, fam.request.h) or fam.request.g.is_identity()
    for s in fam.S.elements:
        if s != x and s != x.inverse():
            assert len(s.payload) >= fam.P + 1
    assert verify_property(fam.S, fam.request).passed


def test_is_power():
    a, b = F.generators()
    assert is_power(a ** 3, a)
    assert is_power(a ** -2, a)
    assert not is_power(a * b, a)
    assert is_power((a * b) ** 4, (a * b) ** 2)
    assert not is_power((a * b) ** 3, (a * b) ** 2)
    assert is_power(zi(12), zi(-4))
    assert not is_power(zi(6), zi(4))


def test_request_validation():
    a = F.generators()[0]
    with pytest.raises(GroupError):
        FamilyRequest(a, a.inverse(), 3)
    with pytest.raises(ValueError):
        FamilyRequest(a, a * a, 0)
    with pytest.raises(GroupError):
        family_free(zi(1), zi(2), 2)


def test_verify_property_pair_set_fails():
    S = GeneratingSet(Z, (zi(3), zi(5)))
    res = verify_property(S, FamilyRequest(zi(3), zi(5), 2))
    assert not res.passed
    assert res.lengths == {"h": 1, "g": 1}


def test_verify_property_reports_lower_bounds():
    fam = family_abelian_z(zi(3), zi(5), 4)
    res = verify_property(fam.S, FamilyRequest(zi(3), zi(5), 4))
    assert isinstance(res.lengths["h"], AtLeast)
    assert res.to_dict()["lengths"]["h"] == ">=4"
    with pytest.raises(ValueError):
        verify_property(fam.S, FamilyRequest(zi(3), zi(5), 4), r_max=2)


# ---------------------------------------------------------------------------
# condition checkers


def brute_theorem_b(elems):
    """Independent recheck written directly from the five conditions."""
    members = set(elems)
    e = elems[0].group.identity()
    pairs = [(x, y) for x in elems for y in elems if x != y and x != y.inverse()]
    c1 = not any(x * y in members for x in elems for y in elems)
    c2 = not any(x * x * y * y == e for x, y in pairs)
    c3 = not any(y.inverse() * x * y == x.inverse() for x, y in pairs)
    c4 = not any(y.inverse() * x * y == x for x, y in pairs)
    c5 = bool(pairs)
    return [c1, c2, c3, c4, c5]


THEOREM_B_CASES = [
    ("product(free(2), z)", ["(a1,0)", "(b1,1)", "(a1b1,0)"]),
    ("zn(2)", ["(1,0)", "(0,1)"]),
    ("free(2)", ["a1", "b1"]),
    ("free(2)", ["a1", "b1", "a1b1"]),
    ("free(2)", ["a2", "b2"]),
    ("product(free(2), z)", ["(a1,0)", "(e,1)"]),
    ("semidirect(z, cyclic(4), action=inversion)", ["(1,0)", "(0,1)"]),
    ("semidirect(z, cyclic(4), action=inversion)", ["(1,1)", "(2,1)"]),
    ("z", ["1"]),
]


@pytest.mark.parametrize("desc,gens", THEOREM_B_CASES)
def test_theorem_b_matches_brute_force(desc, gens):
    G = parse_group(desc)
    S = GeneratingSet(G, tuple(G.parse(t) for t in gens))
    rep = check_theorem_b_conditions(G, S)
    elems = sorted(set(S.elements))
    assert [r.passed for r in rep.results] == brute_theorem_b(elems)
    assert [r.cid for r in rep.results] == ["1", "2", "3", "4", "5"]


def test_theorem_b_report_lines():
    Z2 = parse_group("zn(2)")
    rep = check_theorem_b_conditions(Z2, GeneratingSet.standard(Z2))
    assert not rep.passed
    line = rep["4"].line()
    assert line.startswith("[FAIL] 4:")
    assert "witness" in line
    assert rep.to_dict()["passed"] is False


def test_condition_one_failure_has_triple():
    F2 = FreeGroup(2)
    a, b = F2.generators()
    rep = check_theorem_b_conditions(F2, GeneratingSet(F2, (a, b, a * b)))
    assert not rep["1"].passed
    x, y, z = rep["1"].witness
    assert x * y == z


def test_semishared_examples(z_c4):
    Zs = FreeAbelian(1)
    images = [zi(1), zi(2), zi(-1), zi(-2)]
    rep = check_semishared_conditions(Zs, images)
    assert not rep["d"].passed
    assert rep["a"].passed and rep["f"].passed

    rep = check_semishared_conditions(F, list(GeneratingSet.standard(F).elements))
    assert rep.passed

    rep = check_semishared_conditions(Zs, [zi(3)])
    assert not rep["f"].passed


def test_semishared_involution():
    C = parse_group("cyclic(4)")
    rep = check_semishared_conditions(C, [C.element(2), C.element(1), C.element(3)])
    assert not rep["a"].passed
    assert rep["a"].witness == (C.element(2),)


def test_torsion():
    assert [n for n in range(1, 40) if torsion_obstruction(n).admissible] == [1, 2, 3, 4, 6]
    assert torsion_obstruction(5).totient == 4
    for n in range(1, 200):
        assert totient(n) == oracles.totient_bruteforce(n)
    with pytest.raises(ValueError):
        totient(0)


def test_request_grid_sample_matches_oracle():
    # a small slice of the free grid checked against string BFS lengths
    words = ["a1", "b1", "a1b1", "A1b1"]
    for gt, ht in itertools.permutations(words, 2):
        g, h = F.parse(gt), F.parse(ht)
        if g == h.inverse():
            continue
        for R in (2, 3):
            fam = family_free(g, h, R)
            letters = {1: "a", -1: "A", 2: "b", -2: "B"}
            gens = ["".join(letters[x] for x in s.payload) for s in fam.S.elements]
            ball = oracles.free_ball(gens, R - 1)
            other = fam.request.h
            word = "".join(letters[x] for x in other.payload)
            assert word not in ball
