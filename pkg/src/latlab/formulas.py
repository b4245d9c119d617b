"""Covolume formulas on finite group models.

* :func:`serre_covolume` sums 1/vol_H(H_t) over double cosets K t H, with the
  normalisation vol_G(K) = vol_H(K cap H) = mu(K x0) = 1; the closed form
  |G| |K cap H| / (|H| |K|) is kept separately as an oracle.
* :func:`compact_open_consistency` evaluates both sides of
  vol_G(K2) vol_H(K1 cap H) mu(K1 x) = vol_G(K1) vol_H(K2 cap H) mu(K2 x).
* :func:`gamma_trace` builds gamma_n = vol(O_n) / vol_H(H_n) along the chain of
  truncation subgroups, together with the integer indices alpha_n, beta_n.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattices import LatticeSpec, classify, Classification, covolume
from .affine import SubgroupTag
from .truncation import HeadGroup


def is_subgroup(group: HeadGroup, S) -> bool:
    S = np.unique(np.asarray(S, dtype=np.int64))
    if len(S) == 0 or S[0] != 0:
        return False
    table = group.table()
    prod = table[np.ix_(S, S)] if table is not None else group.mul(S[:, None], S[None, :])
    member = np.zeros(group.order, dtype=bool)
    member[S] = True
    closed = member[prod].all()
    return bool(closed and member[group.inv(S)].all())


def _check_subgroups(group, *subgroups):
    for S in subgroups:
        if not is_subgroup(group, S):
            raise ValueError("input is not a subgroup")


@dataclass(frozen=True)
class DoubleCosetDecomposition:
    representatives: tuple[int, ...]
    sizes: tuple[int, ...]
    stabilizer_orders: tuple[int, ...]   # |H_t| with H_t = H cap t^-1 K t
    k_cap_h: int

    def stabilizer_volumes(self) -> tuple[Fraction, ...]:
        """vol_H(H_t) under vol_H(K cap H) = 1."""
        return tuple(Fraction(s, self.k_cap_h) for s in self.stabilizer_orders)

    def serre_sum(self) -> Fraction:
        return sum((1 / v for v in self.stabilizer_volumes()), Fraction(0))


def double_cosets(group: HeadGroup, K, H) -> DoubleCosetDecomposition:
    """Enumerate K\\G/H; each representative is the least index in its class."""
    K = np.unique(np.asarray(K, dtype=np.int64))
    H = np.unique(np.asarray(H, dtype=np.int64))
    _check_subgroups(group, K, H)
    k_cap_h = len(np.intersect1d(K, H))
    table = group.table()
    if table is None:
        return _double_cosets_direct(group, K, H, k_cap_h)
    # least element of each left coset gH, then of each K-orbit of cosets
    coset_label = table[:, H].min(axis=1)
    cosets = np.unique(coset_label)
    double_label = coset_label[table[K][:, cosets]].min(axis=0)
    reps, per_rep = np.unique(double_label, return_counts=True)
    in_K = np.zeros(group.order, dtype=bool)
    in_K[K] = True
    conj = table[table[reps][:, H], group.inv(reps)[:, None]]   # t H t^-1
    stabs = in_K[conj].sum(axis=1).tolist()
    return DoubleCosetDecomposition(tuple(int(r) for r in reps),
                                    tuple(int(c) * len(H) for c in per_rep),
                                    tuple(stabs), k_cap_h)


def _double_cosets_direct(group, K, H, k_cap_h) -> DoubleCosetDecomposition:
    unseen = np.ones(group.order, dtype=bool)
    reps, sizes, stabs = [], [], []
    while unseen.any():
        t = int(np.argmax(unseen))
        cls = np.unique(group.mul(group.mul(K, t)[:, None], H[None, :]))
        unseen[cls] = False
        conj = group.mul(group.mul(t, H), group.inv(t))
        reps.append(t)
        sizes.append(len(cls))
        stabs.append(int(np.isin(conj, K).sum()))
    return DoubleCosetDecomposition(tuple(reps), tuple(sizes), tuple(stabs), k_cap_h)


def serre_covolume(group: HeadGroup, K, H) -> Fraction:
    return double_cosets(group, K, H).serre_sum()


def serre_closed_form(group: HeadGroup, K, H) -> Fraction:
    K = np.unique(np.asarray(K))
    H = np.unique(np.asarray(H))
    return Fraction(group.order * len(np.intersect1d(K, H)), len(H) * len(K))


@dataclass(frozen=True)
class ConsistencyReport:
    orbit_sizes: tuple[int, int]           # |K1 x|, |K2 x|
    stabilizer_meets: tuple[int, int]      # |K1 cap Stab(x)|, |K2 cap Stab(x)|
    scaled_sides: tuple[tuple[Fraction, Fraction], ...]
    normal_pair_index: int | None = None   # [K1 : K2 (K1 cap Stab x)] when K2 <| K1

    @property
    def holds(self) -> bool:
        return all(l == r for l, r in self.scaled_sides)

    @property
    def index_identity_holds(self) -> bool | None:
        if self.normal_pair_index is None:
            return None
        return self.orbit_sizes[0] == self.normal_pair_index * self.orbit_sizes[1]


def _is_normal_in(group, N, K) -> bool:
    conj = group.mul(group.mul(K[:, None], N[None, :]), group.inv(K)[:, None])
    return bool(np.isin(conj, N).all())


def compact_open_consistency(group: HeadGroup, K1, K2, H, x: int = 0, seed: int = 0,
                      scalings: int = 3) -> ConsistencyReport:
    """Both sides of the compact-open consistency identity on X = G/H.

    The point is x*H (x a group index); its stabiliser is x H x^-1.  Haar
    measures are the counting measures times positive rational scalings drawn
    from a seeded generator; the identity must hold for each draw.
    """
    K1 = np.unique(np.asarray(K1, dtype=np.int64))
    K2 = np.unique(np.asarray(K2, dtype=np.int64))
    H = np.unique(np.asarray(H, dtype=np.int64))
    _check_subgroups(group, K1, K2, H)
    if not 0 <= x < group.order:
        raise ValueError("point is not in the modelled space")
    stab = np.unique(group.mul(group.mul(x, H), group.inv(x)))

    def orbit_size(K):
        return len(np.unique(group.mul(group.mul(K, x)[:, None], H[None, :]).min(axis=1)))

    o1, o2 = orbit_size(K1), orbit_size(K2)
    s1, s2 = len(np.intersect1d(K1, stab)), len(np.intersect1d(K2, stab))
    rng = random.Random(seed)
    sides = []
    for _ in range(scalings):
        a, b, c = (Fraction(rng.randint(1, 997), rng.randint(1, 997)) for _ in range(3))
        lhs = (a * len(K2)) * (b * s1) * (c * o1)
        rhs = (a * len(K1)) * (b * s2) * (c * o2)
        sides.append((lhs, rhs))
    index = None
    if set(K2) <= set(K1) and _is_normal_in(group, K2, K1):
        K1H = np.intersect1d(K1, stab)
        prod = np.unique(group.mul(K2[:, None], K1H[None, :]))
        index = len(K1) // len(prod)
    return ConsistencyReport((o1, o2), (s1, s2), tuple(sides), index)


@dataclass(frozen=True)
class GammaTrace:
    gammas: tuple[Fraction, ...]
    alphas: tuple[int, ...]
    betas: tuple[int, ...]
    stabilizes: bool = False   # known constancy beyond the horizon

    @property
    def bound(self) -> int:
        return max(self.betas) if self.betas else 1

    @property
    def floor(self) -> Fraction:
        return self.gammas[0] / self.bound

    @property
    def non_decreasing(self) -> bool:
        return all(a <= b for a, b in zip(self.gammas, self.gammas[1:]))

    @property
    def relation_holds(self) -> bool:
        return all(a * g1 == b * g0 for a, b, g0, g1
                   in zip(self.alphas, self.betas, self.gammas, self.gammas[1:]))

    @classmethod
    def from_volumes(cls, o_volumes: Sequence[Fraction], h_volumes: Sequence[Fraction],
                     stabilizes: bool = False) -> "GammaTrace":
        """Trace from vol(O_n) and vol_H(H_n); consecutive ratios must be integers."""
        gammas = tuple(Fraction(o) / Fraction(h) for o, h in zip(o_volumes, h_volumes))
        alphas, betas = [], []
        for seq, out in ((h_volumes, alphas), (o_volumes, betas)):
            for v0, v1 in zip(seq, seq[1:]):
                r = Fraction(v1) / Fraction(v0)
                if r.denominator != 1:
                    raise ValueError("chain indices must be integers")
                out.append(int(r))
        return cls(gammas, tuple(alphas), tuple(betas), stabilizes)


def gamma_trace(spec: LatticeSpec, horizon: int | None = None) -> GammaTrace:
    """gamma_n for H = Gamma_A along O_0 <= O_1 <= ... in the unit-head normalisation.

    vol(O_n) = |G_0 x ... x G_n| / |U_0 x ... x U_n|; H_n = Gamma_A cap O_n is
    the finite group Gamma_0 x ... x Gamma_n with counting measure (H is
    discrete and H cap U = 1).
    """
    h = spec.horizon if horizon is None else horizon
    head = HeadGroup(spec.seq.values[: h + 1])
    o_vols, h_vols = [], []
    o, hh = Fraction(1), 1
    for n in range(h + 1):
        G = head.factors[n]
        o *= Fraction(G.order, len(G.subgroup_indices(SubgroupTag.UNITS)))
        hh *= len(G.subgroup_indices(spec.gamma_tag(n)))
        o_vols.append(o)
        h_vols.append(Fraction(hh))
    return GammaTrace.from_volumes(o_vols, h_vols, stabilizes=not spec.infinite)


@dataclass(frozen=True)
class IncrementReport:
    increments: tuple[tuple[int, Fraction], ...]   # (n, gamma_{n+1} - gamma_n) for strict increases
    floor: Fraction

    @property
    def holds(self) -> bool:
        return all(d >= self.floor for _, d in self.increments)


def bounded_index_increment_check(trace: GammaTrace) -> IncrementReport:
    """Every strict increase of the trace is at least gamma_first / max beta."""
    incs = tuple((n, g1 - g0) for n, (g0, g1) in enumerate(zip(trace.gammas, trace.gammas[1:]))
                 if g1 > g0)
    return IncrementReport(incs, trace.floor)


@dataclass(frozen=True)
class CocompactnessVerdict:
    certified: bool
    supremum: Fraction
    levels: int
    reason: str

    @property
    def verdict(self) -> str:
        return "cocompact-certified" if self.certified else "not-certified"


def bounded_volume_cocompactness(volumes) -> CocompactnessVerdict:
    """Finite-level cocompactness certificate from a gamma trace or a volume list.

    Certified when the volumes are bounded and stop growing: for a trace this
    uses what is known beyond the horizon, for a bare list it requires the last
    two levels to agree.
    """
    if isinstance(volumes, GammaTrace):
        values = volumes.gammas
        stable = volumes.stabilizes
    else:
        values = tuple(Fraction(v) for v in volumes)
        stable = len(values) >= 2 and values[-1] == values[-2]
    if not values:
        raise ValueError("empty volume family")
    sup = max(values)
    if stable:
        return CocompactnessVerdict(True, sup, len(values), "volumes bounded and constant from some level on")
    return CocompactnessVerdict(False, sup, len(values), "volumes keep increasing")


def gamma_matches_covolume(spec: LatticeSpec, trace: GammaTrace) -> bool:
    """gamma_k == C_k at every level, and the last gamma lies in the enclosure."""
    if classify(spec) is Classification.NOT_LATTICE:
        return all(trace.gammas[k] == covolume_partial(spec, k) for k in range(len(trace.gammas)))
    ok = all(trace.gammas[k] == covolume(spec, k).partial for k in range(len(trace.gammas)))
    last = covolume(spec, len(trace.gammas) - 1)
    return ok and last.contains(trace.gammas[-1])


def covolume_partial(spec: LatticeSpec, k: int) -> Fraction:
    return math.prod((spec.factor(n) for n in range(k + 1)), start=Fraction(1))
