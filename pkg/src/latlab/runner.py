"""Task execution for experiment configs.

Each task returns a JSON-ready dict (rationals as "num/den" strings) and may
append CSV tables to ``traces``.  Independent (lattice, cell) computations are
fanned out over a thread pool; results are always assembled in config order.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .affine import SubgroupTag, affine_group
from .config import ExperimentConfig
from .exceptions import InvariantError
from .formulas import (bounded_index_increment_check, bounded_volume_cocompactness,
                       covolume_partial, double_cosets, gamma_trace, serre_closed_form)
from .lattices import (Classification, classify, commensurable, covolume,
                       pseudo_unipotent_check, unipotent_witnesses)
from .spectral import (HomSpace, escape_of_mass_trace, escapes, folner_vector,
                       orbit_spectrum, strong_ergodicity_bound)
from .truncation import build_truncation, fundamental_domain, tiles_head

SERRE_TAGS = ("1", SubgroupTag.TRANSLATIONS, SubgroupTag.UNITS, SubgroupTag.TWISTED, "G")


def frac(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _tag_name(t) -> str:
    return t.value if isinstance(t, SubgroupTag) else str(t)


class Runner:
    def __init__(self, cfg: ExperimentConfig, seed: int = 0, jobs: int = 1):
        self.cfg = cfg
        self.seed = seed
        self.jobs = max(1, jobs)
        self.traces: dict[str, list[list]] = {}

    def _map(self, fn, items):
        items = list(items)
        if self.jobs == 1 or len(items) < 2:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(fn, items))

    def run(self) -> dict:
        results = {}
        for task in self.cfg.tasks:
            results[task] = getattr(self, f"task_{task}")()
        return results

    # -- covolume -------------------------------------------------------------
    def task_covolume(self) -> dict:
        out = {}
        for name, spec in self.cfg.lattices.items():
            cls = classify(spec)
            if cls is Classification.NOT_LATTICE:
                out[name] = {"certificate": "exact", "status": "not_lattice",
                             "partials": [frac(covolume_partial(spec, k)) for k in self.cfg.levels]}
                continue
            rows, table = [], [["k", "partial", "fundamental_domain_volume", "lower", "upper", "width"]]
            for k in self.cfg.levels:
                enc = covolume(spec, k)
                model = build_truncation(spec.seq, k, cap=None)
                dom = fundamental_domain(model, spec)
                if dom.volume != enc.partial:
                    raise InvariantError(f"{name}: fundamental domain volume {dom.volume} != C_{k} = {enc.partial}")
                tiles = None
                if model.head.order <= self.cfg.head_cap and model.head.order <= 10**6:
                    tiles = tiles_head(model, dom, spec.lattice_head(model.head))
                    if not tiles:
                        raise InvariantError(f"{name}: translates of the fundamental domain do not tile level {k}")
                lo, hi = enc.interval
                rows.append({"k": k, "partial": frac(enc.partial),
                             "fundamental_domain_volume": frac(dom.volume),
                             "tiles_head": tiles, "lower": frac(lo), "upper": frac(hi),
                             "width": frac(enc.width), "width_float": float(enc.width)})
                table.append([k, frac(enc.partial), frac(dom.volume), frac(lo), frac(hi), frac(enc.width)])
            widths = [Fraction(r["width"]) for r in rows]
            out[name] = {"certificate": "exact", "status": cls.value, "levels": rows,
                         "width_non_increasing": all(b <= a for a, b in zip(widths, widths[1:]))}
            self.traces[f"covolume_{name}.csv"] = table
        return out

    # -- classify -------------------------------------------------------------
    def task_classify(self) -> dict:
        return {name: {"certificate": "exact", "class": classify(spec).value,
                       "mask": spec.mask_string(), "tail": spec.tail_mode,
                       "tail_rule": spec.seq.tail_rule.describe()}
                for name, spec in self.cfg.lattices.items()}

    # -- commensurate ---------------------------------------------------------
    def task_commensurate(self) -> list:
        out = []
        for a, b in self.cfg.pairs:
            cert = commensurable(self.cfg.lattices[a], self.cfg.lattices[b])
            out.append({"pair": [a, b], "certificate": "exact", "commensurable": cert.commensurable,
                        "index_trace": list(cert.index_trace), "differing": list(cert.differing),
                        "tails_differ": cert.tails_differ,
                        "stabilizes_at": cert.stabilizes_at if cert.bounded else None})
        return out

    # -- serre ----------------------------------------------------------------
    def task_serre(self) -> dict:
        k = self.cfg.serre_level
        model = build_truncation(self.cfg.seq, k, cap=self.cfg.head_cap)
        head = model.head
        choices = list(itertools.product(SERRE_TAGS, repeat=k + 1))
        subgroups = [(tags, head.marked_product(tags)) for tags in choices]
        rows = []
        for (tk, K), (th, H) in itertools.product(subgroups, repeat=2):
            dec = double_cosets(head, K, H)
            lhs, rhs = dec.serre_sum(), serre_closed_form(head, K, H)
            if lhs != rhs:
                raise InvariantError(f"double-coset sum {lhs} != closed form {rhs}")
            rows.append({"K": "".join(map(_tag_name, tk)), "H": "".join(map(_tag_name, th)),
                         "double_cosets": len(dec.representatives), "covolume": frac(lhs)})
        return {"certificate": "exhaustive", "level": k, "head_order": head.order,
                "pairs": len(rows), "all_agree": True, "rows": rows}

    # -- gamma ----------------------------------------------------------------
    def task_gamma(self) -> dict:
        out = {}
        for name, spec in self.cfg.lattices.items():
            tr = gamma_trace(spec)
            inc = bounded_index_increment_check(tr)
            verdict = bounded_volume_cocompactness(tr)
            if not tr.relation_holds:
                raise InvariantError(f"{name}: alpha gamma_(n+1) != beta gamma_n")
            out[name] = {"certificate": "exact", "gammas": [frac(g) for g in tr.gammas],
                         "alphas": list(tr.alphas), "betas": list(tr.betas),
                         "non_decreasing": tr.non_decreasing, "relation_holds": tr.relation_holds,
                         "increment_floor": frac(inc.floor), "increments_hold": inc.holds,
                         "cocompactness": verdict.verdict, "supremum": frac(verdict.supremum)}
            table = [["n", "gamma", "alpha", "beta"]]
            for n, g in enumerate(tr.gammas):
                table.append([n, frac(g), tr.alphas[n] if n < len(tr.alphas) else "",
                              tr.betas[n] if n < len(tr.betas) else ""])
            self.traces[f"gamma_{name}.csv"] = table
        return out

    # -- spectrum -------------------------------------------------------------
    def _cells(self):
        return [(name, spec, m, k) for name, spec in self.cfg.lattices.items()
                for m, k in self.cfg.cells()]

    def _space(self, spec, m, k):
        return HomSpace(spec, m, k, cap=self.cfg.point_cap)

    def task_spectrum(self) -> dict:
        def cell(item):
            name, spec, m, k = item
            space = self._space(spec, m, k)
            rep = orbit_spectrum(space, seed=self.seed)
            verified = None
            if rep.witness is not None:
                perms = [space.generator_perm(g) for g in space.generators()]
                verified = rep.witness.verify(perms)
                if not verified:
                    raise InvariantError(f"{name} ({m},{k}): invariant witness fails")
            return name, {"m": m, "k": k, "points": rep.point_count, "orbits": rep.orbit_count,
                          "orbit_sizes": list(rep.orbit_sizes), "top_eigenvalue": rep.top_eigenvalue,
                          "gap": rep.gap, "generates": rep.generates,
                          "witness_verified": verified,
                          "certificate": "exact" if rep.orbit_count > 1 else "heuristic"}

        out: dict = {name: {"cells": []} for name in self.cfg.lattices}
        for name, row in self._map(cell, self._cells()):
            out[name]["cells"].append(row)
        for name in self.cfg.lattices:
            table = [["m", "k", "points", "orbits", "gap"]]
            table += [[r["m"], r["k"], r["points"], r["orbits"], _g17(r["gap"])]
                      for r in out[name]["cells"]]
            self.traces[f"spectrum_{name}.csv"] = table

        for name, spec in self.cfg.lattices.items():
            esc = []
            for m in self.cfg.escape_m:
                levels = [k for k in self.cfg.escape_k if k > m]
                if not levels:
                    continue
                rows = escape_of_mass_trace(spec, m, levels, cap=self.cfg.escape_point_cap)
                for r in rows:
                    if r.core_mass != r.gamma_ratio:
                        raise InvariantError(f"{name}: core mass {r.core_mass} != gamma ratio {r.gamma_ratio}")
                esc.append({"m": m, "certificate": "exact", "escapes": escapes(rows),
                            "rows": [{"k": r.k, "points": r.point_count, "orbits": r.orbit_count,
                                      "core_mass": frac(r.core_mass),
                                      "gamma_ratio": frac(r.gamma_ratio),
                                      "witness_verified": r.witness_verified} for r in rows]})
                self.traces[f"escape_{name}_m{m}.csv"] = (
                    [["k", "points", "orbits", "core_mass", "gamma_ratio"]]
                    + [[r.k, r.point_count, r.orbit_count, frac(r.core_mass), frac(r.gamma_ratio)]
                       for r in rows])
            if esc:
                out[name]["escape"] = esc
        return out

    # -- folner ---------------------------------------------------------------
    def task_folner(self) -> dict:
        def cell(item):
            name, spec, m, k = item
            space = self._space(spec, m, k)
            j = max(m, -1)
            try:
                fw = folner_vector(space, j)
            except ValueError as exc:
                return name, {"m": m, "k": k, "level": j, "skipped": str(exc)}
            ok = all(d.defect <= d.bound + 1e-12 for d in fw.defects)
            if not ok or abs(fw.norm - 1.0) > 1e-9:
                raise InvariantError(f"{name} ({m},{k}): Folner vector bounds fail")
            return name, {"m": m, "k": k, "level": j, "certificate": "exact",
                          "folner_volume": frac(fw.folner_volume),
                          "complement_mass": frac(fw.complement_mass),
                          "norm": fw.norm, "mean": fw.mean, "mean_bound": fw.mean_bound,
                          "probes": [{"probe": d.label, "inside": d.in_folner_set,
                                      "ratio": frac(d.folner_ratio), "defect": d.defect,
                                      "bound": d.bound} for d in fw.defects]}

        out: dict = {name: [] for name in self.cfg.lattices}
        for name, row in self._map(cell, self._cells()):
            out[name].append(row)
        return out

    # -- ergodicity -----------------------------------------------------------
    def task_ergodicity(self) -> dict:
        def cell(item):
            name, spec, m, k = item
            space = self._space(spec, m, k)
            try:
                b = strong_ergodicity_bound(space, seed=self.seed)
            except ValueError as exc:
                return name, {"m": m, "k": k, "skipped": str(exc)}
            return name, {"m": m, "k": k, "points": space.size, "certificate": b.certificate,
                          "folner_level": b.folner_level, "core_mass": frac(b.core_mass),
                          "probe_volume": frac(b.probe_volume), "threshold": frac(b.threshold),
                          "min_defect": frac(b.min_defect), "holds": b.holds,
                          "balanced_exact": b.balanced_exact, "sets_examined": b.sets_examined}

        out: dict = {name: [] for name in self.cfg.lattices}
        for name, row in self._map(cell, self._cells()):
            out[name].append(row)
        return out

    # -- witnesses ------------------------------------------------------------
    def task_witnesses(self) -> dict:
        out = {}
        rng = np.random.default_rng(self.seed)
        qs = self.cfg.seq.values
        for name, spec in self.cfg.lattices.items():
            entry: dict = {"certificate": "exact"}
            if classify(spec) is Classification.NON_UNIFORM:
                count = min(self.cfg.witness_count, len(spec.members()))
                entry["unipotent"] = [
                    {"coordinate": w.coordinate,
                     "gamma": [w.gamma.t.index, w.gamma.u.index],
                     "conjugate": [w.conjugate.t.index, w.conjugate.u.index],
                     "lands_in_units": w.lands_in_units}
                    for w in unipotent_witnesses(spec, count)]
            else:
                entry["unipotent"] = []
            out[name] = entry
        refuted = 0
        samples = []
        for _ in range(self.cfg.pseudo_samples):
            coords = [0] * len(qs)
            while not any(coords):
                coords = [int(rng.integers(affine_group(q).order)) if rng.random() < 0.5 else 0
                          for q in qs]
            r = pseudo_unipotent_check(coords, self.cfg.seq)
            if not r.refuted:
                raise InvariantError(f"conjugacy class of {coords} reaches the identity")
            refuted += 1
            samples.append({"element": coords, "coordinate": r.coordinate, "class_size": r.class_size})
        return {"lattices": out,
                "pseudo_unipotent": {"certificate": "exhaustive", "samples": len(samples),
                                     "refuted": refuted, "examples": samples[:5]}}


def _g17(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(x, ".17g")
