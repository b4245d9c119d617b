import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latlab.affine import (AffElem, SubgroupTag, affine_group, conjugate, coset_space,
                           marked_coset_space, subgroup_elements)
from latlab.fields import field_of_order, prime_power

ORDERS = [q for q in range(2, 65) if prime_power(q)]
MEDIUM = [q for q in ORDERS if q <= 16]


def affine_matrix(F, g):
    """(t, u) as the map x -> u x + t, applied to every field element."""
    t, u = g.t.index, g.u.index
    return tuple(int(v) for v in F.add(F.mul(u, np.arange(F.q)), t))


@pytest.mark.parametrize("q", MEDIUM)
def test_multiplication_matches_composition_of_maps(q):
    F = field_of_order(q)
    G = affine_group(q)
    maps = {g: affine_matrix(F, G.from_index(g)) for g in range(G.order)}
    lookup = {m: g for g, m in maps.items()}
    assert len(lookup) == G.order
    for a in range(G.order):
        for b in range(0, G.order, max(1, G.order // 11)):
            composed = tuple(maps[a][maps[b][x]] for x in range(q))
            assert lookup[composed] == int(G.mul(a, b))


@pytest.mark.parametrize("q", ORDERS)
def test_group_axioms(q):
    G = affine_group(q)
    g = G.all_indices()
    assert np.all(G.mul(g, G.inv(g)) == G.identity)
    assert np.all(G.mul(G.identity, g) == g)
    rng = np.random.default_rng(q)
    a, b, c = (rng.integers(G.order, size=200) for _ in range(3))
    assert np.array_equal(G.mul(G.mul(a, b), c), G.mul(a, G.mul(b, c)))


@pytest.mark.parametrize("q", ORDERS)
def test_subgroup_sizes_and_intersections(q):
    G = affine_group(q)
    T, U, S = (set(G.subgroup_indices(t).tolist()) for t in SubgroupTag)
    assert (len(T), len(U), len(S)) == (q, q - 1, q - 1)
    assert T & U == T & S == {G.identity}
    for H in (T, U, S):
        assert {int(G.mul(a, b)) for a in H for b in list(H)[:5]} <= H


@pytest.mark.parametrize("q", ORDERS)
def test_conjugation_identity_exhaustive(q):
    """(a,1)(x-1,x)(a,1)^-1 = ((x-1)(1-a), x) for every a and every unit x."""
    F = field_of_order(q)
    for a in F.elements():
        g = AffElem(a, F.one)
        for x in F.elements()[1:]:
            lhs = conjugate(g, AffElem(x - F.one, x))
            assert lhs == AffElem((x - F.one) * (F.one - a), x)


@pytest.mark.parametrize("q", ORDERS)
def test_twisted_is_conjugate_of_units(q):
    G = affine_group(q)
    F = field_of_order(q)
    c = G.element(F.zero - F.one, F.one).index
    U = G.subgroup_indices(SubgroupTag.UNITS)
    S = G.subgroup_indices(SubgroupTag.TWISTED)
    assert set(G.conj(c, U).tolist()) == set(S.tolist())


@pytest.mark.parametrize("q", [q for q in MEDIUM if q > 2])
def test_units_have_two_orbits_on_twisted_cosets(q):
    cs = marked_coset_space(q, SubgroupTag.TWISTED)
    U = cs.group.subgroup_indices(SubgroupTag.UNITS)
    orbits = cs.orbits(U)
    assert sorted(len(o) for o in orbits) == [1, q - 1]
    # the fixed coset is (1, 1) S
    F = field_of_order(q)
    fixed = [o for o in orbits if len(o) == 1][0][0]
    assert cs.point_of[cs.group.element(F.one, F.one).index] == fixed


@pytest.mark.parametrize("q", MEDIUM)
def test_units_act_regularly_on_translation_cosets(q):
    cs = marked_coset_space(q, SubgroupTag.TRANSLATIONS)
    U = cs.group.subgroup_indices(SubgroupTag.UNITS)
    assert [len(o) for o in cs.orbits(U)] == [q - 1]


@settings(max_examples=40, deadline=None)
@given(q=st.sampled_from(MEDIUM), data=st.data())
def test_coset_action_is_a_group_action(q, data):
    tag = data.draw(st.sampled_from(list(SubgroupTag)))
    cs = marked_coset_space(q, tag)
    G = cs.group
    g = data.draw(st.integers(0, G.order - 1))
    h = data.draw(st.integers(0, G.order - 1))
    gh = int(G.mul(g, h))
    assert np.array_equal(cs.action[gh], cs.action[g][cs.action[h]])
    assert cs.size * len(G.subgroup_indices(tag)) == G.order
    # stabilizer of the base point is the subgroup itself
    assert set(cs.stabilizer(0).tolist()) == set(G.subgroup_indices(tag).tolist())


def test_generators_generate():
    for q in (5, 8, 9, 11):
        G = affine_group(q)
        seen = {G.identity}
        frontier = list(seen)
        gens = G.generators()
        while frontier:
            nxt = []
            for a in frontier:
                for s in gens:
                    b = int(G.mul(a, s))
                    if b not in seen:
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        assert len(seen) == G.order


def test_subgroup_elements_wrapper():
    F = field_of_order(7)
    S = subgroup_elements(F, "S")
    assert all(e.t == e.u - F.one for e in S)
    assert len(S) == 6


def test_coset_space_rejects_non_subgroup():
    G = affine_group(5)
    with pytest.raises(ValueError):
        coset_space(G, np.array([0, 1]))
