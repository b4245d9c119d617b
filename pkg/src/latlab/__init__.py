"""Exact finite-level experiments on lattices in restricted products of affine groups."""

__version__ = "0.1.0"

from .exceptions import (CapExceededError, EstimateInapplicableError, InvariantError,
                         LatlabError, NotALatticeError)
from .fields import FieldElem, FiniteField, field_of_order
from .affine import AffElem, AffineGroup, SubgroupTag, affine_group, coset_space, conjugate
from .truncation import (HeadGroup, PrimePowerSeq, TailRule, build_truncation,
                         fundamental_domain, standard_normalization_check)
from .lattices import (Classification, LatticeSpec, classify, commensurable, covolume,
                       pseudo_unipotent_check, unipotent_witnesses)
from .formulas import (bounded_index_increment_check, bounded_volume_cocompactness,
                       compact_open_consistency, double_cosets, gamma_trace, serre_closed_form,
                       serre_covolume)
from .spectral import (HomSpace, escape_of_mass_trace, folner_vector, orbit_spectrum,
                       strong_ergodicity_bound)

__all__ = [
    "AffElem",
    "affine_group",
    "AffineGroup",
    "bounded_index_increment_check",
    "bounded_volume_cocompactness",
    "build_truncation",
    "CapExceededError",
    "Classification",
    "classify",
    "compact_open_consistency",
    "commensurable",
    "conjugate",
    "coset_space",
    "covolume",
    "double_cosets",
    "escape_of_mass_trace",
    "EstimateInapplicableError",
    "field_of_order",
    "FieldElem",
    "FiniteField",
    "folner_vector",
    "fundamental_domain",
    "gamma_trace",
    "HeadGroup",
    "HomSpace",
    "InvariantError",
    "LatlabError",
    "LatticeSpec",
    "NotALatticeError",
    "orbit_spectrum",
    "PrimePowerSeq",
    "pseudo_unipotent_check",
    "serre_closed_form",
    "serre_covolume",
    "standard_normalization_check",
    "strong_ergodicity_bound",
    "SubgroupTag",
    "TailRule",
    "unipotent_witnesses",
]
