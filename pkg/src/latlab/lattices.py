"""The lattices Gamma_A = (+)_n Gamma_n with Gamma_n in {S_n, T_n}.

A subset A of the naturals is described by a finite bit mask over the horizon
0..h of the prime-power sequence and a periodic tail pattern that says which
indices beyond h belong to A.  ``ALL_IN`` and ``ALL_OUT`` are the two constant
patterns; longer patterns (for instance ``(1, 0)``) describe sets such as the
even numbers, which is what non-commensurability certificates need.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .affine import AffElem, SubgroupTag, affine_group, conjugate
from .exceptions import EstimateInapplicableError, NotALatticeError
from .fields import field_of_order
from .truncation import PrimePowerSeq

ALL_IN: tuple[int, ...] = (1,)
ALL_OUT: tuple[int, ...] = (0,)


def _parse_tail(tail) -> tuple[int, ...]:
    if isinstance(tail, str):
        name = tail.strip().lower()
        if name in ("all_in", "allin", "in"):
            return ALL_IN
        if name in ("all_out", "allout", "out"):
            return ALL_OUT
        if name.startswith("periodic:"):
            tail = name.split(":", 1)[1]
        tail = tuple(int(ch) for ch in tail)
    tail = tuple(int(b) for b in tail)
    if not tail or any(b not in (0, 1) for b in tail):
        raise ValueError(f"invalid tail pattern {tail!r}")
    # reduce to the primitive period so equal sets compare equal
    for p in range(1, len(tail) + 1):
        if len(tail) % p == 0 and tail == tail[:p] * (len(tail) // p):
            return tail[:p]
    return tail  # pragma: no cover


def _tail_name(tail: tuple[int, ...]) -> str:
    if tail == ALL_IN:
        return "all_in"
    if tail == ALL_OUT:
        return "all_out"
    return "periodic:" + "".join(map(str, tail))


@dataclass(frozen=True)
class LatticeSpec:
    """Gamma_A over ``seq``: bit n of ``mask`` set iff n in A (Gamma_n = S_n)."""

    seq: PrimePowerSeq
    mask: int = 0
    tail: tuple[int, ...] = ALL_OUT

    def __post_init__(self):
        object.__setattr__(self, "tail", _parse_tail(self.tail))
        if self.mask < 0 or self.mask >> (self.seq.horizon + 1):
            raise ValueError("mask has bits beyond the horizon")

    @classmethod
    def from_members(cls, seq: PrimePowerSeq, members: Iterable[int], tail=ALL_OUT) -> "LatticeSpec":
        mask = 0
        for n in members:
            mask |= 1 << n
        return cls(seq, mask, tail)

    @classmethod
    def all_in(cls, seq: PrimePowerSeq) -> "LatticeSpec":
        return cls(seq, (1 << (seq.horizon + 1)) - 1, ALL_IN)

    @classmethod
    def standard(cls, seq: PrimePowerSeq) -> "LatticeSpec":
        """Lambda = (+) T_n, the uniform lattice."""
        return cls(seq, 0, ALL_OUT)

    @property
    def horizon(self) -> int:
        return self.seq.horizon

    @property
    def tail_mode(self) -> str:
        return _tail_name(self.tail)

    def contains(self, n: int) -> bool:
        if n <= self.horizon:
            return bool(self.mask >> n & 1)
        return bool(self.tail[(n - self.horizon - 1) % len(self.tail)])

    def members(self, upto: int | None = None) -> list[int]:
        upto = self.horizon if upto is None else upto
        return [n for n in range(upto + 1) if self.contains(n)]

    @property
    def infinite(self) -> bool:
        return self.seq.tail_rule.has_tail and 1 in self.tail

    def gamma_tag(self, n: int) -> SubgroupTag:
        return SubgroupTag.TWISTED if self.contains(n) else SubgroupTag.TRANSLATIONS

    def factor(self, n: int) -> Fraction:
        """c_n: the covolume of Gamma_n in G_n with vol(U_n) = 1."""
        q = self.seq[n]
        return Fraction(q, q - 1) if self.contains(n) else Fraction(1)

    def lattice_head(self, head) -> np.ndarray:
        return head.marked_product([self.gamma_tag(n) for n in range(head.k + 1)])

    def mask_string(self) -> str:
        return "".join("1" if self.contains(n) else "0" for n in range(self.horizon + 1))


class Classification(enum.Enum):
    NOT_LATTICE = "NotLattice"
    UNIFORM = "UniformLattice"
    NON_UNIFORM = "NonUniformLattice"


@dataclass(frozen=True)
class CovolumeEnclosure:
    level: int
    partial: Fraction
    tail_hi: Fraction
    explicit_terms: int = 0

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        return (self.partial, self.partial * self.tail_hi)

    @property
    def width(self) -> Fraction:
        lo, hi = self.interval
        return hi - lo

    def contains(self, value: Fraction) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


def _check_estimate(spec: LatticeSpec):
    for n, q in enumerate(spec.seq.values):
        if q <= 4:
            raise EstimateInapplicableError(f"q_{n} = {q}; the tail bound needs q_n > 4")


def beyond_horizon_bound(spec: LatticeSpec) -> tuple[Fraction, int]:
    """Rational R >= prod_{n > h, n in A} q_n/(q_n - 1), and the number of
    explicitly bounded terms used.

    Uses log(q/(q-1)) < 2/q <= 2/g(n) (valid for q > 4), exp(s) <= 1/(1-s) for
    s < 1, and peels off leading terms with c_n <= g'/(g'-1), g' = max(g(n), 5),
    until the remaining reciprocal sum is below 1/4.
    """
    rule = spec.seq.tail_rule
    h = spec.horizon
    if not rule.has_tail or 1 not in spec.tail:
        return Fraction(1), 0
    if not rule.summable:
        raise NotALatticeError(f"tail rule {rule.describe()} is not summable; the covolume diverges")
    prod = Fraction(1)
    N = h
    quarter = Fraction(1, 4)
    while rule.bound(N + 1) <= 4 or rule.reciprocal_tail(N) >= quarter:
        N += 1
        if spec.contains(N):
            g = max(rule.bound(N), Fraction(5))
            prod *= g / (g - 1)
    s = 2 * rule.reciprocal_tail(N)
    return prod / (1 - s), N - h


def covolume(spec: LatticeSpec, k: int) -> CovolumeEnclosure:
    """Exact C_k and a rational enclosure of the full covolume."""
    _check_estimate(spec)
    if not -1 <= k <= spec.horizon:
        raise ValueError(f"level {k} outside [-1, {spec.horizon}]")
    partial = math.prod((spec.factor(n) for n in range(k + 1)), start=Fraction(1))
    known = math.prod((spec.factor(n) for n in range(k + 1, spec.horizon + 1)), start=Fraction(1))
    beyond, extra = beyond_horizon_bound(spec)
    return CovolumeEnclosure(k, partial, known * beyond, extra)


def classify(spec: LatticeSpec) -> Classification:
    if not spec.infinite:
        return Classification.UNIFORM
    if spec.seq.tail_rule.summable:
        return Classification.NON_UNIFORM
    return Classification.NOT_LATTICE


@dataclass(frozen=True)
class CommensurabilityCertificate:
    commensurable: bool
    index_trace: tuple[int, ...]
    differing: tuple[int, ...]
    tails_differ: bool
    certificate: str = "horizon"

    @property
    def stabilizes_at(self) -> int | None:
        """First level after which the trace is constant within the horizon."""
        if not self.differing:
            return -1
        return self.differing[-1]

    @property
    def bounded(self) -> bool:
        return not self.tails_differ


def _same_tail(a: LatticeSpec, b: LatticeSpec) -> bool:
    period = math.lcm(len(a.tail), len(b.tail))
    h = a.horizon
    return all(a.contains(n) == b.contains(n) for n in range(h + 1, h + 1 + period))


def commensurable(a: LatticeSpec, b: LatticeSpec) -> CommensurabilityCertificate:
    """Decide commensurability of Gamma_A and Gamma_B.

    The index [Gamma_A,<=k : Gamma_A,<=k cap Gamma_B,<=k] picks up a factor
    |Gamma^A_n| (q_n - 1 or q_n, since S_n cap T_n = 1) at every n in A sym B;
    it is bounded iff A sym B is finite, i.e. iff the tails agree.
    """
    if a.seq != b.seq:
        raise ValueError("commensurability is only decided over the same sequence")
    trace, differing = [], []
    index = 1
    for n in range(a.horizon + 1):
        if a.contains(n) != b.contains(n):
            q = a.seq[n]
            index *= (q - 1) if a.contains(n) else q
            differing.append(n)
        trace.append(index)
    same = _same_tail(a, b) or not a.seq.tail_rule.has_tail
    return CommensurabilityCertificate(same, tuple(trace), tuple(differing), not same)


@dataclass(frozen=True)
class UnipotentWitness:
    coordinate: int
    gamma: AffElem
    conjugator: AffElem
    conjugate: AffElem

    @property
    def depth(self) -> int:
        return self.coordinate

    @property
    def lands_in_units(self) -> bool:
        return not self.conjugate.t


def unipotent_witnesses(spec: LatticeSpec, count: int) -> list[UnipotentWitness]:
    """Lattice elements gamma_n in S_n whose conjugates by (1, 1) lie in U_n.

    The witnesses sit in ever deeper coordinates, so the conjugates lie in
    shrinking identity neighbourhoods and tend to 1.
    """
    if classify(spec) is not Classification.NON_UNIFORM:
        raise ValueError("approximated unipotents are only produced for non-uniform lattices")
    members = spec.members()
    if count > len(members):
        raise ValueError(f"only {len(members)} members of A within the horizon")
    out = []
    for n in members[:count]:
        F = field_of_order(spec.seq[n])
        x = F.generator()
        gamma = AffElem(x - 1, x)
        g = AffElem(F.one, F.one)
        out.append(UnipotentWitness(n, gamma, g, conjugate(g, gamma)))
    return out


@dataclass(frozen=True)
class PseudoUnipotentRefutation:
    trivial: bool
    coordinate: int | None = None
    class_size: int = 0
    class_contains_identity: bool = False

    @property
    def refuted(self) -> bool:
        return not self.trivial and not self.class_contains_identity


def pseudo_unipotent_check(g: Sequence, seq: PrimePowerSeq) -> PseudoUnipotentRefutation:
    """Show the conjugacy class of a head element g stays away from 1.

    ``g`` is a sequence of per-coordinate elements (AffElem or affine-group
    indices).  At the first coordinate n with g_n != 1, every conjugate has
    image in the class of g_n in G_n, which is enumerated and cannot contain 1.
    """
    for n, gn in enumerate(g):
        G = affine_group(seq[n])
        idx = gn.index if isinstance(gn, AffElem) else int(gn)
        if idx == G.identity:
            continue
        cls = np.unique(G.conj(G.all_indices(), idx))
        return PseudoUnipotentRefutation(False, n, len(cls), bool(np.any(cls == G.identity)))
    return PseudoUnipotentRefutation(True)
