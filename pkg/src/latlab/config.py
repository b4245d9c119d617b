"""Experiment configuration: INI-style sections of ``key = value`` lines.

Example::

    [sequence]
    values = 5, 11, 17, 29
    tail_rule = square

    [lattices]
    gamma_all = 1111 all_in
    lambda    = 0000 all_out

    [tasks]
    run = covolume, classify, gamma
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .exceptions import LatlabError
from .lattices import LatticeSpec
from .truncation import DEFAULT_HEAD_CAP, PrimePowerSeq, TailRule

TASKS = ("covolume", "classify", "commensurate", "serre", "gamma",
         "spectrum", "folner", "ergodicity", "witnesses")


class ConfigError(LatlabError):
    pass


def parse_int_list(text: str) -> list[int]:
    """'0-3' -> [0, 1, 2, 3]; '-1, 0, 2' -> [-1, 0, 2]; '' -> []."""
    out = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        lo, sep, hi = part[1:].partition("-")
        if sep:
            lo = part[0] + lo
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_names(text: str) -> list[str]:
    return [p.strip() for p in text.replace("\n", ",").split(",") if p.strip()]


@dataclass
class ExperimentConfig:
    name: str
    seq: PrimePowerSeq
    lattices: dict[str, LatticeSpec]
    levels: list[int]
    cells_k: list[int]
    cells_m: list[int]
    escape_m: list[int]
    escape_k: list[int]
    tasks: list[str]
    pairs: list[tuple[str, str]]
    serre_level: int = 0
    witness_count: int = 3
    pseudo_samples: int = 100
    head_cap: int = DEFAULT_HEAD_CAP
    point_cap: int = 5000
    escape_point_cap: int = 100_000
    report_name: str = "report.json"
    traces: bool = True
    digest: str = ""

    def cells(self) -> list[tuple[int, int]]:
        return [(m, k) for k in self.cells_k for m in self.cells_m if m < k]


def _get(cp, section, key, default=None):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    return default


def load_config(path) -> ExperimentConfig:
    raw = Path(path).read_bytes()
    try:
        return parse_config(raw.decode("utf-8"), digest=hashlib.sha256(raw).hexdigest())
    except ConfigError:
        raise
    except (ValueError, KeyError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str, digest: str = "") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(text)
    if not cp.has_section("sequence"):
        raise ConfigError("missing [sequence] section")
    values = parse_int_list(cp.get("sequence", "values"))
    rule = TailRule(
        kind=_get(cp, "sequence", "tail_rule", "square"),
        c=Fraction(_get(cp, "sequence", "c", "1")),
        r=Fraction(_get(cp, "sequence", "r", "2")),
        shift=int(_get(cp, "sequence", "shift", "2")),
    )
    seq = PrimePowerSeq(tuple(values), rule)

    lattices = {}
    if cp.has_section("lattices"):
        for name, spec_text in cp.items("lattices"):
            parts = spec_text.split()
            if len(parts) != 2:
                raise ConfigError(f"lattice {name!r}: expected '<mask bits> <tail>'")
            bits, tail = parts
            if len(bits) != len(values) or set(bits) - {"0", "1"}:
                raise ConfigError(f"lattice {name!r}: mask must be {len(values)} bits")
            lattices[name] = LatticeSpec.from_members(
                seq, [n for n, b in enumerate(bits) if b == "1"], tail)

    tasks = parse_names(_get(cp, "tasks", "run", ""))
    unknown = [t for t in tasks if t not in TASKS]
    if unknown:
        raise ConfigError(f"unknown task(s): {', '.join(unknown)}")

    pairs = []
    for item in parse_names(_get(cp, "commensurate", "pairs", "")):
        a, sep, b = item.partition(":")
        if not sep:
            raise ConfigError(f"pair {item!r}: expected 'a:b'")
        pairs.append((a.strip(), b.strip()))
    for a, b in pairs:
        for n in (a, b):
            if n not in lattices:
                raise ConfigError(f"pair refers to undefined lattice {n!r}")

    horizon = seq.horizon
    levels = parse_int_list(_get(cp, "levels", "k", f"0-{horizon}"))
    cells_k = parse_int_list(_get(cp, "cells", "k", ""))
    cells_m = parse_int_list(_get(cp, "cells", "m", ""))
    escape_k = parse_int_list(_get(cp, "escape", "k", ""))
    escape_m = parse_int_list(_get(cp, "escape", "m", ""))
    for k in levels + cells_k + escape_k:
        if not -1 <= k <= horizon:
            raise ConfigError(f"level {k} outside [-1, {horizon}]")

    cfg = ExperimentConfig(
        name=_get(cp, "experiment", "name", "experiment"),
        seq=seq,
        lattices=lattices,
        levels=levels,
        cells_k=cells_k,
        cells_m=cells_m,
        escape_m=escape_m,
        escape_k=escape_k,
        tasks=tasks,
        pairs=pairs,
        serre_level=int(_get(cp, "serre", "level", "0")),
        witness_count=int(_get(cp, "witnesses", "count", "3")),
        pseudo_samples=int(_get(cp, "witnesses", "pseudo_samples", "100")),
        head_cap=int(_get(cp, "caps", "head_size", str(DEFAULT_HEAD_CAP))),
        point_cap=int(_get(cp, "caps", "point_count", "5000")),
        escape_point_cap=int(_get(cp, "caps", "escape_point_count", "100000")),
        report_name=_get(cp, "output", "report", "report.json"),
        traces=_get(cp, "output", "traces", "yes").lower() in ("yes", "true", "1", "on"),
        digest=digest,
    )
    if min(cfg.head_cap, cfg.point_cap, cfg.escape_point_cap) <= 0:
        raise ConfigError("caps must be positive")
    return cfg
