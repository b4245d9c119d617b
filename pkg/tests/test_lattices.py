from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latlab.affine import affine_group
from latlab.exceptions import NotALatticeError
from latlab.lattices import (Classification, LatticeSpec, beyond_horizon_bound, classify,
                             commensurable, covolume, pseudo_unipotent_check,
                             unipotent_witnesses)
from latlab.truncation import HeadGroup, PrimePowerSeq, TailRule

SEQ = PrimePowerSeq((5, 11, 17, 29, 37))


def test_tail_pattern_parsing():
    assert LatticeSpec(SEQ, 0, "periodic:1010").tail == (1, 0)
    assert LatticeSpec(SEQ, 0, "all_in").tail_mode == "all_in"
    with pytest.raises(ValueError):
        LatticeSpec(SEQ, 0, "sometimes")
    with pytest.raises(ValueError):
        LatticeSpec(SEQ, 1 << 5)


def test_membership_beyond_horizon():
    evens = LatticeSpec.from_members(SEQ, [0, 2, 4], "periodic:01")
    assert [evens.contains(n) for n in range(10)] == [n % 2 == 0 for n in range(10)]


def test_covolume_partials_exact():
    spec = LatticeSpec.all_in(SEQ)
    expect = [Fraction(5, 4), Fraction(11, 8), Fraction(187, 128),
              Fraction(5423, 3584), Fraction(200651, 129024)]
    assert [covolume(spec, k).partial for k in range(5)] == expect


def test_enclosure_contains_long_truncation():
    """A much longer explicit product with q_n = (n+2)^2 stays inside the enclosure."""
    spec = LatticeSpec.all_in(SEQ)
    enc = covolume(spec, 4)
    lo, hi = enc.interval
    value = float(enc.partial)
    for n in range(5, 20000):
        q = (n + 2) ** 2
        value *= q / (q - 1)
    assert float(lo) <= value <= float(hi)


def test_finite_sequence_has_trivial_tail_bound():
    seq = PrimePowerSeq((5,), TailRule("none"))
    assert beyond_horizon_bound(LatticeSpec.all_in(seq)) == (Fraction(1), 0)


def test_harmonic_rule_is_not_a_lattice():
    seq = PrimePowerSeq((5, 7, 7), TailRule("harmonic", c=10))
    spec = LatticeSpec.all_in(seq)
    assert classify(spec) is Classification.NOT_LATTICE
    with pytest.raises(NotALatticeError):
        covolume(spec, 1)


@pytest.mark.parametrize("mask", range(32))
@pytest.mark.parametrize("tail", ["all_in", "all_out"])
def test_classification_table(mask, tail):
    spec = LatticeSpec(SEQ, mask, tail)
    expect = Classification.UNIFORM if tail == "all_out" else Classification.NON_UNIFORM
    assert classify(spec) is expect


def _explicit_index(a, b, k):
    """[Gamma_A,<=k : Gamma_A,<=k cap Gamma_B,<=k] by intersecting index sets."""
    head = HeadGroup(SEQ.values[: k + 1])
    ga = a.lattice_head(head)
    gb = b.lattice_head(head)
    return len(ga) // len(np.intersect1d(ga, gb))


@pytest.mark.parametrize("ma,mb", [(0, 3), (1, 2), (3, 3), (2, 1)])
def test_commensurability_index_matches_intersection(ma, mb):
    a = LatticeSpec(SEQ, ma, "all_out")
    b = LatticeSpec(SEQ, mb, "all_out")
    cert = commensurable(a, b)
    for k in range(2):
        assert cert.index_trace[k] == _explicit_index(a, b, k)


def test_evens_odds_not_commensurable():
    evens = LatticeSpec.from_members(SEQ, [0, 2, 4], "periodic:01")
    odds = LatticeSpec.from_members(SEQ, [1, 3], "periodic:10")
    cert = commensurable(evens, odds)
    assert not cert.commensurable and cert.tails_differ
    assert all(b > a for a, b in zip(cert.index_trace, cert.index_trace[1:]))


def test_unipotent_witnesses():
    spec = LatticeSpec.all_in(SEQ)
    ws = unipotent_witnesses(spec, 5)
    assert [w.depth for w in ws] == list(range(5))
    assert all(w.lands_in_units and not w.gamma.is_identity() for w in ws)
    with pytest.raises(ValueError):
        unipotent_witnesses(LatticeSpec.standard(SEQ), 1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 10**6), min_size=3, max_size=3))
def test_pseudo_unipotent_refuted(raw):
    seq = PrimePowerSeq((5, 11, 17))
    coords = [r % affine_group(q).order for r, q in zip(raw, seq.values)]
    res = pseudo_unipotent_check(coords, seq)
    if not any(coords):
        assert res.trivial
    else:
        assert res.refuted
        G = affine_group(seq[res.coordinate])
        # class size is |G| / |centralizer|
        g = coords[res.coordinate]
        centralizer = np.sum(G.mul(G.all_indices(), g) == G.mul(g, G.all_indices()))
        assert res.class_size * centralizer == G.order
