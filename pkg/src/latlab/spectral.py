"""Finite homogeneous spaces O_k / Lambda_k and their spectral certificates.

The space at cell (m, k) is X = P_k / (Gamma_0 x ... x Gamma_k), a product
of the coset spaces G_n / Gamma_n, with the uniform (invariant) probability
measure.  The acting group is

    W_m = G_0 x ... x G_m x U_{m+1} x ... x U_k,

the image of the truncation subgroup O_m.  Points are mixed-radix indices of
their per-coordinate coset labels, coordinate 0 most significant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, eigsh

from .affine import CosetSpace, SubgroupTag, marked_coset_space
from .exceptions import CapExceededError
from .lattices import LatticeSpec
from .truncation import HeadGroup

DEFAULT_POINT_CAP = 200_000
DENSE_LIMIT = 2000
EXHAUSTIVE_LIMIT = 24


@dataclass(frozen=True)
class Generator:
    """A head element supported on one coordinate."""

    coordinate: int
    element: int          # index in the affine group G_coordinate
    kind: str             # "translation" or "unit"

    def label(self) -> str:
        return f"{self.kind}[{self.coordinate}]:{self.element}"


class HomSpace:
    def __init__(self, spec: LatticeSpec, m: int, k: int, cap: int = DEFAULT_POINT_CAP):
        if not -1 <= m < k <= spec.horizon:
            raise ValueError(f"need -1 <= m < k <= {spec.horizon}, got m={m}, k={k}")
        self.spec = spec
        self.m = m
        self.k = k
        self.qs = spec.seq.values[: k + 1]
        self.cosets: list[CosetSpace] = [marked_coset_space(q, spec.gamma_tag(n))
                                          for n, q in enumerate(self.qs)]
        self.radices = np.array([cs.size for cs in self.cosets], dtype=np.int64)
        n_points = math.prod(int(r) for r in self.radices)
        if n_points > cap:
            raise CapExceededError(f"{n_points} points exceeds cap {cap}")
        self.size = n_points
        strides = np.ones(k + 1, dtype=np.int64)
        for n in range(k - 1, -1, -1):
            strides[n] = strides[n + 1] * self.radices[n + 1]
        self.strides = strides
        idx = np.arange(n_points, dtype=np.int64)
        self.digits = (idx[:, None] // strides) % self.radices
        self.head = HeadGroup(self.qs)

    @property
    def mass(self) -> Fraction:
        return Fraction(1, self.size)

    def measure(self, points) -> Fraction:
        return Fraction(len(np.unique(np.asarray(points))), self.size)

    # -- actions --------------------------------------------------------------
    def coordinate_perm(self, n: int, g: int) -> np.ndarray:
        """Permutation of X induced by g in G_n (identity elsewhere)."""
        row = self.cosets[n].action[g]
        d = self.digits[:, n]
        return np.arange(self.size, dtype=np.int64) + (row[d] - d) * self.strides[n]

    def element_perm(self, coords: Sequence[int]) -> np.ndarray:
        """Permutation induced by a head element given coordinate-wise."""
        new = np.empty_like(self.digits)
        for n, g in enumerate(coords):
            new[:, n] = self.cosets[n].action[int(g)][self.digits[:, n]]
        return new @ self.strides

    def generator_perm(self, gen: Generator) -> np.ndarray:
        return self.coordinate_perm(gen.coordinate, gen.element)

    def level_generators(self, j: int) -> list[Generator]:
        """Generators of W_j: all of G_n for n <= j, the unit group beyond."""
        gens = []
        for n in range(self.k + 1):
            G = self.head.factors[n]
            if n <= j:
                gens += [Generator(n, t, "translation") for t in G.generators(SubgroupTag.TRANSLATIONS)]
            gens += [Generator(n, u, "unit") for u in G.generators(SubgroupTag.UNITS)]
        return gens

    def generators(self) -> list[Generator]:
        return self.level_generators(self.m)

    def level_order(self, j: int) -> int:
        """|W_j| for -1 <= j <= k."""
        return math.prod(q * (q - 1) if n <= j else q - 1 for n, q in enumerate(self.qs))

    def in_level(self, coords: Sequence[int], j: int) -> bool:
        units = SubgroupTag.UNITS
        return all(int(g) in set(self.head.factors[n].subgroup_indices(units).tolist())
                   for n, g in enumerate(coords) if n > j)

    def orbit_labels(self, perms: Sequence[np.ndarray]) -> np.ndarray:
        """Orbit index per point; orbit 0 holds point 0, orbits ordered by least point."""
        if not perms:
            return np.arange(self.size)
        src = np.tile(np.arange(self.size), len(perms))
        dst = np.concatenate(perms)
        graph = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)),
                           shape=(self.size, self.size))
        _, raw = connected_components(graph, directed=True, connection="weak")
        _, first = np.unique(raw, return_index=True)
        order = np.argsort(first)
        relabel = np.empty(len(order), dtype=np.int64)
        relabel[order] = np.arange(len(order))
        return relabel[raw]

    def level_orbit(self, j: int) -> np.ndarray:
        """Points of the W_j-orbit of the base point (j = -1 allowed)."""
        perms = [self.generator_perm(g) for g in self.level_generators(j)]
        return np.flatnonzero(self.orbit_labels(perms) == 0)


def build_homspace(spec: LatticeSpec, m: int, k: int, cap: int = DEFAULT_POINT_CAP) -> HomSpace:
    return HomSpace(spec, m, k, cap)


def generated_order(head: HeadGroup, gens: Sequence[int], cap: int = 500_000) -> int | None:
    """Order of the subgroup generated by head elements, or None beyond cap."""
    gens = np.unique(np.asarray(gens, dtype=np.int64))
    seen = np.zeros(head.order, dtype=bool)
    seen[0] = True
    frontier = np.array([0], dtype=np.int64)
    count = 1
    while len(frontier):
        nxt = np.unique(head.mul(frontier[:, None], gens[None, :]).ravel())
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        count += len(nxt)
        if count > cap:
            return None
        frontier = nxt
    return count


# -- averaging operator ------------------------------------------------------

def _symmetrised(perms):
    out = []
    for p in perms:
        inv = np.empty_like(p)
        inv[p] = np.arange(len(p))
        out += [p, inv]
    return out


def averaging_apply(perms: Sequence[np.ndarray], f: np.ndarray) -> np.ndarray:
    """M f = mean over g in Q u Q^-1 of f(g^-1 x)."""
    sym = _symmetrised(perms)
    acc = np.zeros_like(f, dtype=float)
    for p in sym:
        acc += f[p]
    return acc / len(sym)


def averaging_matrix(perms: Sequence[np.ndarray], size: int) -> np.ndarray:
    sym = _symmetrised(perms)
    M = np.zeros((size, size))
    rows = np.arange(size)
    for p in sym:
        np.add.at(M, (rows, p), 1.0)
    return M / len(sym)


def top_mean_zero_eigenvalue(perms: Sequence[np.ndarray], size: int, seed: int = 0) -> float:
    """Largest eigenvalue of M on mean-zero functions.

    The constant function is moved to eigenvalue -1 by subtracting 2/N * J;
    the remaining spectrum (the mean-zero one) is unchanged.
    """
    if size == 1:
        return float("nan")
    if size <= DENSE_LIMIT:
        M = averaging_matrix(perms, size) - 2.0 / size
        return float(np.linalg.eigvalsh(M)[-1])
    sym = _symmetrised(perms)

    def matvec(v):
        v = np.ravel(v)
        acc = np.zeros(size)
        for p in sym:
            acc += v[p]
        return acc / len(sym) - 2.0 * v.mean()

    op = LinearOperator((size, size), matvec=matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(size)
    vals = eigsh(op, k=1, which="LA", v0=v0, tol=0, maxiter=100_000, return_eigenvectors=False)
    return float(vals[-1])


@dataclass(frozen=True)
class InvariantWitness:
    """f = numerators / denominator; mean zero and invariant under every generator."""

    numerators: np.ndarray
    denominator: int
    orbits: tuple[int, int]

    def as_fractions(self) -> list[Fraction]:
        return [Fraction(int(a), self.denominator) for a in self.numerators]

    def verify(self, perms: Sequence[np.ndarray]) -> bool:
        f = self.numerators
        if int(f.sum()) != 0:
            return False
        return all(np.array_equal(f[p], f) for p in perms)


@dataclass(frozen=True)
class SpectralReport:
    point_count: int
    orbit_count: int
    orbit_sizes: tuple[int, ...]
    top_eigenvalue: float
    gap: float
    witness: InvariantWitness | None
    generates: bool | None
    generator_count: int

    @property
    def inv_dim(self) -> int:
        return self.orbit_count


def orbit_spectrum(space: HomSpace, generators: Sequence[Generator] | None = None,
                   compute_gap: bool = True, seed: int = 0) -> SpectralReport:
    gens = space.generators() if generators is None else list(generators)
    perms = [space.generator_perm(g) for g in gens]
    generates = None
    if space.head.order <= 5_000_000:
        heads = [space.head.embed(g.coordinate, g.element) for g in gens]
        order = generated_order(space.head, heads)
        if order is not None:
            generates = order == space.level_order(space.m)
    labels = space.orbit_labels(perms)
    sizes = np.bincount(labels)
    witness = None
    if len(sizes) > 1:
        a, b = int(sizes[0]), int(sizes[1])
        num = np.zeros(space.size, dtype=np.int64)
        num[labels == 0] = b
        num[labels == 1] = -a
        # f = 1_{O0}/|O0| - 1_{O1}/|O1|, scaled by |O0||O1|
        witness = InvariantWitness(num, a * b, (0, 1))
    top = float("nan")
    gap = 1.0 if space.size == 1 else float("nan")
    if compute_gap and space.size > 1:
        top = top_mean_zero_eigenvalue(perms, space.size, seed)
        gap = max(0.0, 1.0 - top)
    return SpectralReport(space.size, len(sizes), tuple(int(s) for s in sizes), top, gap,
                          witness, generates, len(gens))


# -- Folner vectors ---------------------------------------------------------------

@dataclass(frozen=True)
class ProbeDefect:
    label: str
    in_folner_set: bool
    folner_ratio: Fraction       # mu(F sym gF) / mu(F)
    defect: float                # || f - g.f ||_2
    bound: float                 # sqrt(folner_ratio)


@dataclass(frozen=True)
class FolnerWitness:
    level: int
    folner_volume: Fraction
    core: np.ndarray
    target: np.ndarray
    psi: tuple[Fraction, ...]
    psi_l1: Fraction
    f: np.ndarray
    defects: tuple[ProbeDefect, ...]
    mean: float                   # integral of f, its overlap with constants
    complement_mass: Fraction     # m(X \ core)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.mean(self.f**2)))

    @property
    def mean_bound(self) -> float:
        return math.sqrt(self.complement_mass)

    @property
    def support_avoids_core(self) -> bool:
        return not any(self.psi[i] for i in self.core)


def folner_vector(space: HomSpace, j: int, target=None,
                  probes: Sequence[tuple[str, Sequence[int]]] | None = None) -> FolnerWitness:
    """psi = F * 1_A for F = O_j, and its L2 normalisation f = sqrt(psi/|psi|_1).

    The convolution is evaluated through orbit-stabiliser counting:
    psi(x) = mu(F) |A cap F x| / |F x|.  The core is the F-orbit of the base
    point and A defaults to everything outside F^-1 * core.
    """
    if not -1 <= j <= space.k:
        raise ValueError("Folner level outside the head")
    gens = space.level_generators(j)
    labels = space.orbit_labels([space.generator_perm(g) for g in gens])
    core = np.flatnonzero(labels == 0)
    if target is None:
        target = np.flatnonzero(labels != 0)
    target = np.unique(np.asarray(target, dtype=np.int64))
    if len(target) == 0:
        raise ValueError("empty complement of the core; the space is too small for this level")
    in_target = np.zeros(space.size, dtype=bool)
    in_target[target] = True
    orbit_size = np.bincount(labels)
    hits = np.bincount(labels, weights=in_target.astype(np.int64)).astype(np.int64)

    F_volume = Fraction(math.prod(q for n, q in enumerate(space.qs) if n <= j))
    psi = [F_volume * Fraction(int(hits[l]), int(orbit_size[l])) for l in labels]
    psi_l1 = sum(psi, Fraction(0)) * space.mass
    dens = np.array([float(v / psi_l1) for v in psi])
    f = np.sqrt(dens)

    if probes is None:
        probes = []
        for g in space.level_generators(space.k):
            coords = [0] * (space.k + 1)
            coords[g.coordinate] = g.element
            probes.append((g.label(), coords))
    rows = []
    for label, coords in probes:
        perm = space.element_perm(coords)
        inside = space.in_level(coords, j)
        ratio = Fraction(0) if inside else Fraction(2)
        defect = float(np.sqrt(np.mean((f - f[perm]) ** 2)))
        rows.append(ProbeDefect(label, inside, ratio, defect, math.sqrt(ratio)))
    comp = Fraction(space.size - len(core), space.size)
    return FolnerWitness(j, F_volume, core, target, tuple(psi), psi_l1, f, tuple(rows),
                         float(np.mean(f)), comp)


# -- strong ergodicity -----------------------------------------------------------

@dataclass(frozen=True)
class ErgodicityBound:
    folner_level: int
    core_mass: Fraction
    probe_volume: Fraction          # mu_G(K), standard normalisation
    delta: Fraction
    threshold: Fraction             # 0.36 delta / mu_G(K)
    min_defect: Fraction
    witness_set: tuple[int, ...]
    certificate: str                # "exhaustive" or "heuristic"
    balanced_exact: bool            # False when |X| is odd
    probe_perm_count: int
    sets_examined: int

    @property
    def holds(self) -> bool:
        return self.min_defect >= self.threshold


def _product_perms(space: HomSpace, per_coord_rows: Sequence[np.ndarray]) -> np.ndarray:
    perms = np.zeros((1, space.size), dtype=np.int64)
    for n, rows in enumerate(per_coord_rows):
        contrib = rows[:, space.digits[:, n]] * space.strides[n]
        perms = (perms[:, None, :] + contrib[None, :, :]).reshape(-1, space.size)
    return perms


def level_perms(space: HomSpace, j: int) -> np.ndarray:
    """Every distinct permutation of X induced by W_j."""
    per = []
    for n in range(space.k + 1):
        cs = space.cosets[n]
        elems = (np.arange(cs.group.order) if n <= j
                 else cs.group.subgroup_indices(SubgroupTag.UNITS))
        per.append(np.unique(cs.action[elems], axis=0))
    return _product_perms(space, per)


def level_perm_count(space: HomSpace, j: int) -> int:
    total = 1
    for n in range(space.k + 1):
        cs = space.cosets[n]
        elems = (np.arange(cs.group.order) if n <= j
                 else cs.group.subgroup_indices(SubgroupTag.UNITS))
        total *= len(np.unique(cs.action[elems], axis=0))
    return total


def set_defect(perms: np.ndarray, B) -> Fraction:
    """max over k of m(kB sym B)."""
    inB = np.zeros(perms.shape[1], dtype=bool)
    inB[np.asarray(B, dtype=np.int64)] = True
    overlap = (inB[perms] & inB).sum(axis=1)
    worst = int(overlap.min())
    return Fraction(2 * (int(inB.sum()) - worst), perms.shape[1])


def _popcount(a):
    return np.bitwise_count(a)


def _exhaustive_min_defect(perms: np.ndarray, size: int):
    half = size // 2
    all_masks = np.arange(1 << size, dtype=np.uint32)
    masks = all_masks[_popcount(all_masks) == half]
    del all_masks
    if size % 2 == 0:
        masks = masks[(masks & 1) == 1]   # B and its complement have the same defect
    nbytes = (size + 7) // 8
    byte_vals = np.arange(256, dtype=np.uint32)
    min_overlap = np.full(len(masks), half, dtype=np.int64)
    for perm in perms:
        image = np.zeros(len(masks), dtype=np.uint32)
        for b in range(nbytes):
            table = np.zeros(256, dtype=np.uint32)
            for i in range(8):
                pt = 8 * b + i
                if pt < size:
                    table |= ((byte_vals >> i) & 1) << np.uint32(perm[pt])
            image |= table[(masks >> np.uint32(8 * b)) & 0xFF]
        np.minimum(min_overlap, _popcount(image & masks).astype(np.int64), out=min_overlap)
    best = int(np.argmax(min_overlap))
    best_overlap = int(min_overlap[best])
    mask = int(masks[best])
    B = tuple(i for i in range(size) if mask >> i & 1)
    return Fraction(2 * (half - best_overlap), size), B, len(masks)


def _local_search(perms_sample, size, core, rng, restarts=6, steps=300):
    half = size // 2
    best_val, best_B, examined = None, None, 0
    starts = []
    core_list = np.asarray(core)
    for r in range(restarts):
        if r % 2 == 0 and len(core_list) >= half:
            B = rng.choice(core_list, size=half, replace=False)
        else:
            B = rng.choice(size, size=half, replace=False)
        starts.append(B)
    for B in starts:
        inB = np.zeros(size, dtype=bool)
        inB[B] = True
        cur = _defect_count(perms_sample, inB)
        temp = 2.0
        for step in range(steps):
            i = rng.choice(np.flatnonzero(inB))
            o = rng.choice(np.flatnonzero(~inB))
            inB[i], inB[o] = False, True
            val = _defect_count(perms_sample, inB)
            examined += 1
            if val <= cur or rng.random() < math.exp((cur - val) / temp):
                cur = val
            else:
                inB[i], inB[o] = True, False
            temp = max(0.05, temp * 0.98)
        if best_val is None or cur < best_val:
            best_val, best_B = cur, np.flatnonzero(inB)
    return best_B, examined


def _defect_count(perms, inB) -> int:
    overlap = (inB[perms] & inB).sum(axis=1)
    return 2 * (int(inB.sum()) - int(overlap.min()))


def choose_folner_level(space: HomSpace) -> tuple[int, Fraction]:
    """Least j with m(O_j x0) >= 9/10."""
    for j in range(-1, space.k + 1):
        mass = space.measure(space.level_orbit(j))
        if mass >= Fraction(9, 10):
            return j, mass
    raise ValueError("no truncation subgroup captures 90% of the mass; increase k")


def strong_ergodicity_bound(space: HomSpace, seed: int = 0,
                            exhaustive_limit: int = EXHAUSTIVE_LIMIT,
                            sample_perms: int = 256) -> ErgodicityBound:
    """Defect floor for half-mass sets under K = F O F^-1 with F = O_j.

    mu_H is counting measure on the discrete stabiliser (so the identity
    neighbourhood O of H has mass 1), m is the probability measure on X, and
    the standard normalisation then gives every head element mass 1/|X|.
    Since O lies inside the subgroup O_j = F, K = O_j.
    """
    j, core_mass = choose_folner_level(space)
    K_order = space.level_order(j)
    mu_K = Fraction(K_order, space.size)
    delta = Fraction(1)
    threshold = Fraction(36, 100) * delta / mu_K
    balanced_exact = space.size % 2 == 0
    n_perms = level_perm_count(space, j)
    if space.size <= exhaustive_limit:
        perms = level_perms(space, j)
        min_def, B, examined = _exhaustive_min_defect(perms, space.size)
        return ErgodicityBound(j, core_mass, mu_K, delta, threshold, min_def, B,
                               "exhaustive", balanced_exact, len(perms), examined)

    rng = np.random.default_rng(seed)
    if n_perms <= 4 * sample_perms:
        full = level_perms(space, j)
        sample = full
    else:
        full = None
        gens = space.level_generators(j)
        gen_perms = [space.generator_perm(g) for g in gens]
        words = []
        for _ in range(sample_perms):
            p = np.arange(space.size)
            for _ in range(int(rng.integers(1, 8))):
                p = gen_perms[int(rng.integers(len(gen_perms)))][p]
            words.append(p)
        sample = np.array(gen_perms + words)
    core = space.level_orbit(j)
    B, examined = _local_search(sample, space.size, core, rng)
    value = set_defect(sample, B)
    if value < threshold:
        # a sampled defect only bounds the true one from below; recheck in full
        value = set_defect(full if full is not None else level_perms(space, j), B)
    return ErgodicityBound(j, core_mass, mu_K, delta, threshold, value,
                           tuple(int(b) for b in B), "heuristic", balanced_exact,
                           n_perms, examined)


# -- escape of mass ---------------------------------------------------------------

@dataclass(frozen=True)
class EscapeRow:
    k: int
    point_count: int
    orbit_count: int
    core_mass: Fraction         # m(W_m x0)
    gamma_ratio: Fraction       # gamma_m / gamma_k
    witness_verified: bool


def escape_of_mass_trace(spec: LatticeSpec, m: int, levels: Sequence[int],
                         cap: int = DEFAULT_POINT_CAP) -> list[EscapeRow]:
    """Mass of the level-m core inside X_k for increasing k.

    For a non-uniform spec the core mass gamma_m / gamma_k keeps falling: the
    W_m-invariant witnesses put ever more of their weight outside any fixed
    compact piece.  For a uniform spec the table is flat.
    """
    from .formulas import gamma_trace

    gammas = gamma_trace(spec).gammas
    g_m = gammas[m] if m >= 0 else Fraction(1)
    rows = []
    for k in levels:
        space = HomSpace(spec, m, k, cap)
        perms = [space.generator_perm(g) for g in space.generators()]
        labels = space.orbit_labels(perms)
        sizes = np.bincount(labels)
        verified = True
        if len(sizes) > 1:
            num = np.zeros(space.size, dtype=np.int64)
            num[labels == 0] = sizes[1]
            num[labels == 1] = -sizes[0]
            verified = InvariantWitness(num, int(sizes[0] * sizes[1]), (0, 1)).verify(perms)
        core = Fraction(int(sizes[0]), space.size)
        rows.append(EscapeRow(k, space.size, len(sizes), core, g_m / gammas[k], verified))
    return rows


def escapes(rows: Sequence[EscapeRow]) -> bool:
    return all(b.core_mass < a.core_mass for a, b in zip(rows, rows[1:]))
