import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latlab.affine import SubgroupTag
from latlab.formulas import (GammaTrace, bounded_index_increment_check,
                             bounded_volume_cocompactness, compact_open_consistency, double_cosets,
                             gamma_matches_covolume, gamma_trace, is_subgroup, serre_closed_form,
                             serre_covolume)
from latlab.lattices import LatticeSpec, covolume
from latlab.truncation import HeadGroup, PrimePowerSeq

TAGS = ("1", SubgroupTag.TRANSLATIONS, SubgroupTag.UNITS, SubgroupTag.TWISTED, "G")


def brute_double_cosets(head, K, H):
    """Double cosets as frozensets, built with plain Python loops."""
    K, H = [int(x) for x in K], [int(x) for x in H]
    seen, classes = set(), []
    for t in range(head.order):
        if t in seen:
            continue
        cls = frozenset(int(head.mul(head.mul(k, t), h)) for k in K for h in H)
        seen |= cls
        classes.append((t, cls))
    return classes


@pytest.mark.parametrize("qs", [(5,), (7,), (8,)])
def test_serre_sum_against_brute_force(qs):
    head = HeadGroup(qs)
    for tk, th in itertools.product(TAGS, repeat=2):
        K, H = head.marked_product([tk]), head.marked_product([th])
        classes = brute_double_cosets(head, K, H)
        kh = len(set(K.tolist()) & set(H.tolist()))
        total = Fraction(0)
        for t, _ in classes:
            tinv = int(head.inv(t))
            conj = {int(head.mul(head.mul(tinv, k), t)) for k in K.tolist()}
            total += Fraction(kh, len(conj & set(H.tolist())))
        dec = double_cosets(head, K, H)
        assert len(dec.representatives) == len(classes)
        assert sum(dec.sizes) == head.order
        assert dec.serre_sum() == total == serre_closed_form(head, K, H)


def test_non_subgroup_rejected():
    head = HeadGroup((5,))
    assert not is_subgroup(head, [0, 1])
    with pytest.raises(ValueError):
        serre_covolume(head, [0, 1], head.marked_product(["G"]))


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_compact_open_consistency(data):
    head = HeadGroup((5, 7))
    tags = lambda: [data.draw(st.sampled_from(TAGS)) for _ in range(2)]
    k2_tags = tags()
    # K1 contains K2 factorwise half the time, so the index identity gets exercised
    k1_tags = ["G" if data.draw(st.booleans()) else t for t in k2_tags]
    K1, K2, H = (head.marked_product(t) for t in (k1_tags, k2_tags, tags()))
    x = data.draw(st.integers(0, head.order - 1))
    rep = compact_open_consistency(head, K1, K2, H, x=x, seed=data.draw(st.integers(0, 99)))
    assert rep.holds
    if rep.normal_pair_index is not None:
        assert rep.index_identity_holds


def random_seq(rng):
    primes = [p for p in range(5, 400) if all(p % d for d in range(2, int(p**0.5) + 1))]
    vals = []
    for n in range(int(rng.integers(1, 5))):
        floor = (n + 2) ** 2
        vals.append(int(rng.choice([p for p in primes if p >= floor][:8])))
    return PrimePowerSeq(tuple(vals))


@pytest.mark.parametrize("seed", range(20))
def test_gamma_trace_properties(seed):
    rng = np.random.default_rng(seed)
    seq = random_seq(rng)
    spec = LatticeSpec(seq, int(rng.integers(0, 1 << len(seq))),
                       "all_in" if rng.random() < 0.5 else "all_out")
    tr = gamma_trace(spec)
    assert tr.non_decreasing and tr.relation_holds
    assert gamma_matches_covolume(spec, tr)
    assert bounded_index_increment_check(tr).holds
    for k, g in enumerate(tr.gammas):
        assert g == covolume(spec, k).partial


def test_gamma_example_values():
    spec = LatticeSpec.all_in(PrimePowerSeq((5, 11, 17)))
    tr = gamma_trace(spec)
    assert tr.gammas == (Fraction(5, 4), Fraction(11, 8), Fraction(187, 128))
    assert tr.floor == Fraction(5, 68)


def test_cocompactness_verdicts():
    seq = PrimePowerSeq((5, 11, 17))
    assert bounded_volume_cocompactness(gamma_trace(LatticeSpec.standard(seq))).certified
    assert not bounded_volume_cocompactness(gamma_trace(LatticeSpec.all_in(seq))).certified
    assert bounded_volume_cocompactness([1, 2, 2]).certified
    assert not bounded_volume_cocompactness([1, 2, 3]).certified
    with pytest.raises(ValueError):
        bounded_volume_cocompactness([])


def test_from_volumes_rejects_fractional_indices():
    with pytest.raises(ValueError):
        GammaTrace.from_volumes([Fraction(1), Fraction(3, 2)], [Fraction(1), Fraction(2)])
