"""The affine groups F_q x| F_q^* and their marked subgroups.

An element (t, u) acts on the line by x -> u*x + t, so
(t1, u1)(t2, u2) = (t1 + u1*t2, u1*u2).  Three subgroups are singled out:

* translations ``T = {(t, 1)}``, normal of order q;
* units ``U = {(0, u)}``, the stabiliser of 0, of order q - 1;
* the twisted diagonal ``S = {(x - 1, x)}``, the stabiliser of -1 and hence
  a conjugate of U that meets U trivially.

Group elements are addressed by the canonical index ``t * (q - 1) + (u - 1)``
(u >= 1 as a field index), which orders elements lexicographically by (t, u).
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .fields import FieldElem, FiniteField, field_of_order, make_field


class SubgroupTag(enum.Enum):
    TRANSLATIONS = "T"
    UNITS = "U"
    TWISTED = "S"

    @classmethod
    def parse(cls, value) -> "SubgroupTag":
        if isinstance(value, cls):
            return value
        for tag in cls:
            if value in (tag.value, tag.name, tag.name.lower()):
                return tag
        raise ValueError(f"unknown subgroup tag {value!r}")


class AffineGroup:
    """The group G_q = F_q x| F_q^* with vectorised index arithmetic."""

    def __init__(self, field: FiniteField):
        self.field = field
        self.q = field.q
        self.order = field.q * (field.q - 1)

    # -- index <-> (t, u) ----------------------------------------------------
    def encode(self, t, u):
        return np.asarray(t) * (self.q - 1) + (np.asarray(u) - 1)

    def decode(self, g):
        g = np.asarray(g)
        return g // (self.q - 1), g % (self.q - 1) + 1

    @property
    def identity(self) -> int:
        return 0

    # -- group law -------------------------------------------------------------
    def mul(self, a, b):
        f = self.field
        t1, u1 = self.decode(a)
        t2, u2 = self.decode(b)
        return self.encode(f.add(t1, f.mul(u1, t2)), f.mul(u1, u2))

    def inv(self, a):
        f = self.field
        t, u = self.decode(a)
        ui = f.inv(u)
        return self.encode(f.neg(f.mul(ui, t)), ui)

    def conj(self, g, h):
        """g h g^-1 on indices."""
        return self.mul(self.mul(g, h), self.inv(g))

    # -- subgroups ----------------------------------------------------------------
    def subgroup_indices(self, tag) -> np.ndarray:
        tag = SubgroupTag.parse(tag)
        q = self.q
        if tag is SubgroupTag.TRANSLATIONS:
            return np.sort(self.encode(np.arange(q), 1))
        units = np.arange(1, q)
        if tag is SubgroupTag.UNITS:
            return np.sort(self.encode(0, units))
        return np.sort(self.encode(self.field.sub(units, 1), units))

    def all_indices(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    def element(self, t, u) -> "AffElem":
        return AffElem(self.field(t), self.field(u))

    def from_index(self, g: int) -> "AffElem":
        t, u = self.decode(int(g))
        return AffElem(FieldElem(self.field, int(t)), FieldElem(self.field, int(u)))

    def generators(self, tag=None) -> list[int]:
        """A generating set of G (tag None) or of a marked subgroup."""
        gen = self.field.generator_index
        basis = self.field.additive_basis()
        trans = [int(self.encode(b, 1)) for b in basis]
        unit = int(self.encode(0, gen))
        if tag is None:
            return trans + [unit]
        tag = SubgroupTag.parse(tag)
        if tag is SubgroupTag.TRANSLATIONS:
            return trans
        if tag is SubgroupTag.UNITS:
            return [unit]
        return [int(self.encode(self.field.sub(gen, 1), gen))]

    def __repr__(self):
        return f"AffineGroup(q={self.q})"


@functools.cache
def affine_group(q: int) -> AffineGroup:
    return AffineGroup(field_of_order(q))


@dataclass(frozen=True)
class AffElem:
    t: FieldElem
    u: FieldElem

    def __post_init__(self):
        if self.t.field is not self.u.field:
            raise ValueError("translation and unit parts live in different fields")
        if not self.u:
            raise ValueError("unit part must be nonzero")

    @property
    def field(self) -> FiniteField:
        return self.t.field

    @classmethod
    def identity(cls, field: FiniteField) -> "AffElem":
        return cls(field.zero, field.one)

    def __mul__(self, other: "AffElem") -> "AffElem":
        if other.field is not self.field:
            raise ValueError("cannot multiply elements over different fields")
        return AffElem(self.t + self.u * other.t, self.u * other.u)

    def inv(self) -> "AffElem":
        ui = self.u.inv()
        return AffElem(-(ui * self.t), ui)

    def is_identity(self) -> bool:
        return not self.t and self.u == 1

    @property
    def index(self) -> int:
        q = self.field.q
        return self.t.index * (q - 1) + self.u.index - 1

    def __repr__(self):
        return f"({self.t!r}, {self.u!r})"


def group_mul(a: AffElem, b: AffElem) -> AffElem:
    return a * b


def group_inv(a: AffElem) -> AffElem:
    return a.inv()


def group_identity(field: FiniteField) -> AffElem:
    return AffElem.identity(field)


def conjugate(g: AffElem, h: AffElem) -> AffElem:
    """Return g h g^-1."""
    return g * h * g.inv()


def subgroup_elements(field: FiniteField, tag) -> list[AffElem]:
    group = AffineGroup(field)
    return [group.from_index(i) for i in group.subgroup_indices(tag)]


@dataclass(frozen=True, eq=False)
class CosetSpace:
    """Left cosets G/H with the left translation action.

    ``labels[i]`` is the least group index in the i-th coset; points are sorted
    by label, so the coset of the identity (index 0) is always point 0.
    ``action[g, i]`` is the point g * (coset i).
    """

    group: AffineGroup
    subgroup: np.ndarray
    labels: np.ndarray
    point_of: np.ndarray
    action: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def stabilizer(self, point: int = 0) -> np.ndarray:
        return np.flatnonzero(self.action[:, point] == point)

    def orbits(self, elements) -> list[np.ndarray]:
        """Orbits of the subgroup generated by ``elements`` on the points."""
        rows = self.action[np.asarray(elements, dtype=np.int64)]
        label = np.arange(self.size)
        changed = True
        while changed:
            new = label.copy()
            for row in rows:
                np.minimum.at(new, row, label)
                new = np.minimum(new, new[row])
            changed = not np.array_equal(new, label)
            label = new
        return [np.flatnonzero(label == r) for r in np.unique(label)]


def coset_space(group: AffineGroup, subgroup) -> CosetSpace:
    """Left coset space of a marked subgroup (tag) or of an explicit index set."""
    if isinstance(subgroup, (SubgroupTag, str)):
        H = group.subgroup_indices(subgroup)
    else:
        H = np.unique(np.asarray(subgroup, dtype=np.int64))
        closed = np.isin(group.mul(H[:, None], H[None, :]), H).all()
        if len(H) == 0 or H[0] != group.identity or not closed:
            raise ValueError("index set is not a subgroup")
    G = group.all_indices()
    coset_label = group.mul(G[:, None], H[None, :]).min(axis=1)
    labels = np.unique(coset_label)
    point_of = np.searchsorted(labels, coset_label)
    action = point_of[group.mul(G[:, None], labels[None, :])]
    return CosetSpace(group, H, labels, point_of, action)


@functools.cache
def marked_coset_space(q: int, tag: SubgroupTag) -> CosetSpace:
    return coset_space(affine_group(q), tag)


__all__ = [
    "AffElem",
    "AffineGroup",
    "CosetSpace",
    "SubgroupTag",
    "affine_group",
    "conjugate",
    "coset_space",
    "group_identity",
    "group_inv",
    "group_mul",
    "make_field",
    "marked_coset_space",
    "subgroup_elements",
]
