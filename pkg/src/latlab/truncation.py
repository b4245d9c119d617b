"""Finite truncations of the restricted product of affine groups.

The restricted product G of the groups G_n = F_{q_n} x| F_{q_n}^* relative to
their unit subgroups U_n is modelled level by level.  At level k the head
P_k = G_0 x ... x G_k carries the Haar measure that gives U_0 x ... x U_k
mass 1, so every head element weighs prod 1/(q_n - 1).  The tail
U_{k+1} x U_{k+2} x ... has mass 1 and is never materialised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .affine import AffineGroup, SubgroupTag, affine_group, marked_coset_space
from .exceptions import CapExceededError, EstimateInapplicableError
from .fields import prime_power

if TYPE_CHECKING:
    from .lattices import LatticeSpec

DEFAULT_HEAD_CAP = 10**7
TABLE_LIMIT = 4096


@dataclass(frozen=True)
class TailRule:
    """How the sequence (q_n) behaves beyond the listed values.

    ``square``    q_n >= (n + shift)**2            (summable)
    ``geometric`` q_n >= c * r**n, r > 1           (summable)
    ``harmonic``  q_n <= c * (n + 1)               (not summable)
    ``none``      the sequence stops at the horizon
    """

    kind: str = "square"
    c: Fraction = Fraction(1)
    r: Fraction = Fraction(2)
    shift: int = 2

    KINDS = ("square", "geometric", "harmonic", "none")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown tail rule {self.kind!r}; expected one of {self.KINDS}")
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "r", Fraction(self.r))
        if self.kind == "geometric" and (self.r <= 1 or self.c <= 0):
            raise ValueError("geometric rule needs c > 0 and r > 1")
        if self.kind == "harmonic" and self.c <= 0:
            raise ValueError("harmonic rule needs c > 0")

    @property
    def has_tail(self) -> bool:
        return self.kind != "none"

    @property
    def summable(self) -> bool:
        return self.kind in ("square", "geometric")

    def bound(self, n: int) -> Fraction:
        """g(n): the lower bound (or, for ``harmonic``, upper bound) on q_n."""
        if self.kind == "square":
            return Fraction((n + self.shift) ** 2)
        if self.kind == "geometric":
            return self.c * self.r**n
        if self.kind == "harmonic":
            return self.c * (n + 1)
        raise ValueError("finite sequence has no tail bound")

    def admits(self, n: int, q: int) -> bool:
        if self.kind in ("square", "geometric"):
            return q >= self.bound(n)
        if self.kind == "harmonic":
            return q <= self.bound(n)
        return True

    def reciprocal_tail(self, N: int) -> Fraction:
        """Rational upper bound for sum_{n > N} 1/g(n) (summable rules only)."""
        if self.kind == "square":
            # 1/(n+s)^2 <= integral over [n-1, n] of dx/(x+s)^2
            return Fraction(1, N + self.shift)
        if self.kind == "geometric":
            return 1 / (self.c * self.r**N * (self.r - 1))
        raise ValueError(f"tail rule {self.kind!r} is not summable")

    def describe(self) -> str:
        if self.kind == "square":
            return f"q_n >= (n+{self.shift})^2"
        if self.kind == "geometric":
            return f"q_n >= {self.c}*{self.r}^n"
        if self.kind == "harmonic":
            return f"q_n <= {self.c}*(n+1)"
        return "finite"


@dataclass(frozen=True)
class PrimePowerSeq:
    values: tuple[int, ...]
    tail_rule: TailRule = field(default_factory=TailRule)

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValueError("sequence needs at least one value")
        for n, q in enumerate(values):
            if prime_power(q) is None:
                raise ValueError(f"q_{n} = {q} is not a prime power")
            if q <= 4:
                raise EstimateInapplicableError(f"q_{n} = {q}: every q_n must exceed 4")
            if not self.tail_rule.admits(n, q):
                raise ValueError(f"q_{n} = {q} violates tail rule {self.tail_rule.describe()}")

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n: int) -> int:
        return self.values[n]

    def __len__(self):
        return len(self.values)


class HeadGroup:
    """The finite product G_0 x ... x G_k on mixed-radix indices.

    Coordinate 0 is the most significant digit, so index order is the
    lexicographic order of coordinate vectors.  ``k = -1`` gives the trivial
    group.
    """

    def __init__(self, qs: Sequence[int]):
        self.qs = tuple(int(q) for q in qs)
        self.factors: list[AffineGroup] = [affine_group(q) for q in self.qs]
        self.radices = np.array([g.order for g in self.factors], dtype=np.int64)
        strides = np.ones(len(self.qs), dtype=np.int64)
        for n in range(len(self.qs) - 2, -1, -1):
            strides[n] = strides[n + 1] * self.radices[n + 1]
        self.strides = strides
        self.order = math.prod(int(r) for r in self.radices)
        self._table = None

    @property
    def k(self) -> int:
        return len(self.qs) - 1

    def decode(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self.strides) % self.radices

    def encode(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=np.int64) @ self.strides

    def mul(self, a, b):
        ca, cb = np.broadcast_arrays(self.decode(a), self.decode(b))
        out = np.empty_like(ca)
        for n, g in enumerate(self.factors):
            out[..., n] = g.mul(ca[..., n], cb[..., n])
        return self.encode(out)

    def inv(self, a):
        ca = self.decode(a)
        out = np.empty_like(ca)
        for n, g in enumerate(self.factors):
            out[..., n] = g.inv(ca[..., n])
        return self.encode(out)

    def embed(self, n: int, g: int) -> int:
        """The head element equal to g in coordinate n and 1 elsewhere."""
        return int(g) * int(self.strides[n])

    def product_set(self, per_coordinate: Sequence[np.ndarray]) -> np.ndarray:
        """All head indices whose n-th coordinate lies in per_coordinate[n]."""
        out = np.zeros(1, dtype=np.int64)
        for n, elems in enumerate(per_coordinate):
            elems = np.asarray(elems, dtype=np.int64)
            out = (out[:, None] + elems[None, :] * self.strides[n]).ravel()
        return np.sort(out)

    def marked_product(self, tags: Sequence) -> np.ndarray:
        """Product subgroup with factor ``tags[n]`` at coordinate n.

        A tag is a :class:`SubgroupTag`, ``"1"`` for the trivial factor or
        ``"G"`` for the whole factor.
        """
        return self.product_set([self.factor_subgroup(n, t) for n, t in enumerate(tags)])

    def factor_subgroup(self, n: int, tag) -> np.ndarray:
        g = self.factors[n]
        if tag in ("1", 1, None):
            return np.zeros(1, dtype=np.int64)
        if tag == "G":
            return g.all_indices()
        return g.subgroup_indices(tag)

    def all_indices(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    def table(self) -> np.ndarray | None:
        """Full multiplication table for heads of order <= TABLE_LIMIT, else None."""
        if self.order > TABLE_LIMIT:
            return None
        if self._table is None:
            g = self.all_indices()
            dtype = np.int32 if self.order < 2**31 else np.int64
            self._table = np.stack([self.mul(a, g) for a in g]).astype(dtype)
        return self._table

    def is_identity(self, a) -> bool:
        return int(a) == 0


def _head_order(qs) -> int:
    return math.prod(q * (q - 1) for q in qs)


@dataclass(frozen=True, eq=False)
class TruncationModel:
    seq: PrimePowerSeq
    k: int
    head: HeadGroup
    weight: Fraction

    @property
    def qs(self) -> tuple[int, ...]:
        return self.seq.values[: self.k + 1]

    @property
    def total_volume(self) -> Fraction:
        return self.weight * self.head.order

    def unit_head(self) -> np.ndarray:
        return self.head.marked_product([SubgroupTag.UNITS] * (self.k + 1))

    def volume(self, elements) -> Fraction:
        return self.weight * len(np.unique(np.asarray(elements)))


def build_truncation(seq: PrimePowerSeq, k: int, cap: int | None = DEFAULT_HEAD_CAP) -> TruncationModel:
    """Head model at level k.  The head is never enumerated here; ``cap=None``
    skips the size check for callers that only need per-coordinate data."""
    if k < -1 or k > seq.horizon:
        raise ValueError(f"level {k} outside [-1, {seq.horizon}]")
    qs = seq.values[: k + 1]
    order = _head_order(qs)
    if cap is not None and order > cap:
        raise CapExceededError(f"head order {order} exceeds cap {cap}; choose a smaller k or smaller q's")
    weight = Fraction(1, math.prod(q - 1 for q in qs))
    return TruncationModel(seq, k, HeadGroup(qs), weight)


@dataclass(frozen=True, eq=False)
class FundamentalDomain:
    """Per-coordinate transversals F_n of Gamma_n in G_n, each containing U_n.

    F_n meets every left coset g*Gamma_n exactly once, so the head is the
    disjoint union of the right translates Omega * gamma.
    """

    factors: tuple[np.ndarray, ...]
    volumes: tuple[Fraction, ...]

    @property
    def volume(self) -> Fraction:
        return math.prod(self.volumes, start=Fraction(1))

    def elements(self, head: HeadGroup) -> np.ndarray:
        return head.product_set(self.factors)


def transversal(group: AffineGroup, tag) -> np.ndarray:
    """U together with the least element of every coset of Gamma that U misses."""
    cs = marked_coset_space(group.q, SubgroupTag.parse(tag))
    units = group.subgroup_indices(SubgroupTag.UNITS)
    covered = np.zeros(cs.size, dtype=bool)
    covered[cs.point_of[units]] = True
    extra = []
    for g in range(group.order):
        point = cs.point_of[g]
        if not covered[point]:
            covered[point] = True
            extra.append(g)
    return np.sort(np.concatenate([units, np.array(extra, dtype=np.int64)]))


def fundamental_domain(model: TruncationModel, spec: "LatticeSpec") -> FundamentalDomain:
    factors, volumes = [], []
    for n, q in enumerate(model.qs):
        F = transversal(model.head.factors[n], spec.gamma_tag(n))
        factors.append(F)
        volumes.append(Fraction(len(F), q - 1))
    return FundamentalDomain(tuple(factors), tuple(volumes))


def tiles_head(model: TruncationModel, domain: FundamentalDomain, lattice: np.ndarray) -> bool:
    """Check that Omega * gamma (gamma in the lattice head) partition the head."""
    omega = domain.elements(model.head)
    products = model.head.mul(omega[:, None], np.asarray(lattice)[None, :]).ravel()
    if len(products) != model.head.order:
        return False
    return bool(np.array_equal(np.sort(products), model.head.all_indices()))


@dataclass(frozen=True)
class NormalizationReport:
    lhs: Fraction
    rhs: Fraction
    coset_mass: Fraction
    total_quotient_mass: Fraction
    cosets_met: int

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def standard_normalization_check(model: TruncationModel, H, K) -> NormalizationReport:
    """Compare mu_G(K) with the fibre sum over cosets xH in K*x0.

    mu_G is the model's Haar measure (unit head of mass 1), mu_H gives
    O cap H mass 1 where O is the unit head, and the quotient measure m is the
    one forced by the fibration identity: m(xH) = mu_G(point) / mu_H(point).
    """
    head = model.head
    H = np.unique(np.asarray(H, dtype=np.int64))
    K = np.unique(np.asarray(K, dtype=np.int64))
    O_cap_H = np.intersect1d(model.unit_head(), H)
    mu_H = Fraction(1, len(O_cap_H))
    coset_mass = model.weight / mu_H

    # cosets xH met by K, labelled by least element
    labels = head.mul(K[:, None], H[None, :]).min(axis=1)
    reps, counts = np.unique(labels, return_counts=True)
    rhs = Fraction(0)
    for x, c in zip(reps, counts):
        # |H cap x^-1 K| via h -> x h, checked against the label count
        fibre = np.isin(head.mul(int(x), H), K).sum()
        if fibre != c:
            raise AssertionError("coset fibre count mismatch")
        rhs += mu_H * int(fibre) * coset_mass
    lhs = model.weight * len(K)
    n_cosets = head.order // len(H)
    return NormalizationReport(lhs, rhs, coset_mass, coset_mass * n_cosets, len(reps))
