"""Command line entry point: ``latlab run | explain | version``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from .config import TASKS, ConfigError, load_config
from .exceptions import CapExceededError, EstimateInapplicableError, InvariantError, NotALatticeError
from .runner import Runner

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_INVARIANT = 0, 2, 3, 4

EXPLAIN = {
    "covolume": (
        "Covolume of Gamma_A = (+) Gamma_n with Haar measure normalised by vol(prod U_n) = 1.\n"
        "Each coordinate contributes c_n = q_n/(q_n - 1) when n is in A and 1 otherwise,\n"
        "so C_k = prod_{n<=k} c_n increases to a finite limit whenever sum 1/q_n converges.",
        "exact: C_k is a rational computed twice, as the product of the c_n and as the\n"
        "volume of a fundamental domain built from per-coordinate coset transversals.\n"
        "The enclosure [C_k, C_h * R] bounds the limit; R comes from log(q/(q-1)) < 2/q and\n"
        "the tail rule's reciprocal sum, which is why every q_n must exceed 4."),
    "classify": (
        "Gamma_A is a uniform lattice when A is finite, a non-uniform lattice when A is\n"
        "infinite and the covolume series converges, and not a lattice when it diverges.",
        "exact: decided from the horizon mask, the tail pattern and the tail rule."),
    "commensurate": (
        "Gamma_A and Gamma_B are commensurable exactly when A and B differ in finitely\n"
        "many places; each differing coordinate multiplies the index of the intersection\n"
        "by q_n - 1 or q_n.",
        "exact: the index trace is listed through the horizon; boundedness beyond it\n"
        "follows from comparing the periodic tail patterns."),
    "serre": (
        "For compact open K and a lattice H in a finite model G, the sum over double\n"
        "cosets K t H of 1/vol_H(H cap t^-1 K t) equals the total mass of G/H when\n"
        "vol_G(K) = vol_H(K cap H) = 1.",
        "exhaustive: every pair of marked product subgroups of the chosen head is\n"
        "enumerated and the double-coset sum is compared with |G||K cap H|/(|H||K|)."),
    "gamma": (
        "gamma_n = vol(O_n)/vol_H(H_n) along the truncation subgroups is non-decreasing\n"
        "with alpha_n gamma_{n+1} = beta_n gamma_n; it stabilises exactly when the\n"
        "quotient is compact.",
        "exact: rationals and integer indices; the cocompactness verdict uses the known\n"
        "behaviour of the tail pattern beyond the horizon."),
    "spectrum": (
        "The averaging operator of the level-m generators on X = prod G_n/Gamma_n.\n"
        "Invariant functions are constant on orbits, so more than one orbit means\n"
        "eigenvalue 1 on mean-zero functions, i.e. zero gap.",
        "exact when several orbits exist: an integer-valued mean-zero invariant witness is\n"
        "checked against every generator.  The numerical gap of a single-orbit cell is\n"
        "reported as heuristic (floating point).  Escape tables give the exact mass of\n"
        "the level-m core, which equals gamma_m/gamma_k."),
    "folner": (
        "For F = O_j and a target set outside the core, psi = F * 1_target and\n"
        "f = sqrt(psi/|psi|_1) is a unit vector whose translation defects are bounded by\n"
        "sqrt(mu(F sym gF)/mu(F)).",
        "exact: psi is rational (orbit-stabiliser counting); the defect comparisons are\n"
        "floating point with a 1e-12 slack."),
    "ergodicity": (
        "Balanced sets B of X cannot be almost invariant under K: max_k m(kB sym B) is at\n"
        "least 0.36 delta / mu_G(K), with K the level chosen so that its orbit holds 90%\n"
        "of the mass.",
        "exhaustive for |X| <= 24 (every balanced set is tried), heuristic above that\n"
        "(simulated annealing over sampled permutations; a violator would be rechecked\n"
        "against every permutation of K)."),
    "witnesses": (
        "Non-uniform lattices contain elements (x-1, x) of S_n whose conjugates by (1, 1)\n"
        "are units (0, x), at ever deeper coordinates.  A single non-trivial element of a\n"
        "head never has conjugates approaching 1.",
        "exact: the conjugation is evaluated in the field; for single elements the\n"
        "conjugacy class in the first non-trivial coordinate is enumerated in full."),
}

_FLOAT_TOKEN = re.compile(r'"\\u0000F(.*?)"')


def _encode_floats(obj):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return "\0F" + format(obj, ".17g")
    if isinstance(obj, dict):
        return {k: _encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_floats(v) for v in obj]
    return obj


def render_report(report: dict) -> str:
    """JSON text with floats written to 17 significant digits."""
    text = json.dumps(_encode_floats(report), indent=2, sort_keys=False, ensure_ascii=False)
    return _FLOAT_TOKEN.sub(lambda m: m.group(1), text) + "\n"


def write_csv(path: Path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def _fail(code: int, msg: str) -> int:
    print(f"latlab: {msg}".replace("\n", " "), file=sys.stderr)
    return code


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    except (ConfigError, EstimateInapplicableError, ValueError) as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    runner = Runner(cfg, seed=args.seed, jobs=args.jobs)
    try:
        results = runner.run()
    except CapExceededError as exc:
        return _fail(EXIT_CAP, f"cap exceeded: {exc}")
    except InvariantError as exc:
        return _fail(EXIT_INVARIANT, f"invariant failure: {exc}")
    except (EstimateInapplicableError, NotALatticeError, ValueError) as exc:
        return _fail(EXIT_CONFIG, f"validation error: {exc}")
    report = {
        "provenance": {"artifact": "latlab", "version": __version__,
                       "config_sha256": cfg.digest, "seed": args.seed, "experiment": cfg.name},
        "results": results,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / cfg.report_name).write_text(render_report(report), encoding="utf-8")
    if cfg.traces:
        for name, rows in runner.traces.items():
            write_csv(out / name, rows)
    print(f"wrote {out / cfg.report_name}")
    return EXIT_OK


def cmd_explain(args) -> int:
    if args.task not in EXPLAIN:
        return _fail(EXIT_CONFIG, f"unknown task {args.task!r}; known: {', '.join(TASKS)}")
    statement, cert = EXPLAIN[args.task]
    print(f"{args.task}\n\n{statement}\n\ncertificate:\n{cert}")
    return EXIT_OK


def cmd_version(args) -> int:
    print(__version__)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latlab", description="Exact experiments on lattices in restricted affine products")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default="latlab-out")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_run)
    e = sub.add_parser("explain", help="describe what a task computes and certifies")
    e.add_argument("task")
    e.set_defaults(func=cmd_explain)
    v = sub.add_parser("version", help="print the version")
    v.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
