import csv
import json
import re
from fractions import Fraction
from pathlib import Path

import pytest

import latlab
from latlab import cli, runner
from latlab.config import TASKS, ConfigError, parse_config, parse_int_list

SMALL = """
[sequence]
values = 5, 11, 17
tail_rule = square

[lattices]
twisted = 111 all_in
standard = 000 all_out

[cells]
k = 0-1
m = -1, 0

[escape]
m = 0
k = 1-2

[tasks]
run = {tasks}

[commensurate]
pairs = twisted:standard
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(tmp_path, text, *extra):
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "out"
    code = cli.main(["run", str(cfg), "--out", str(out), *extra])
    return code, out


def test_parse_int_list():
    assert parse_int_list("0-3") == [0, 1, 2, 3]
    assert parse_int_list("-1, 0, 2") == [-1, 0, 2]
    assert parse_int_list("") == []


def test_version(capsys):
    assert cli.main(["version"]) == 0
    assert capsys.readouterr().out.strip() == latlab.__version__


@pytest.mark.parametrize("task", sorted(cli.EXPLAIN))
def test_explain_known(task, capsys):
    assert cli.main(["explain", task]) == 0
    assert "certificate" in capsys.readouterr().out


def test_explain_unknown(capsys):
    assert cli.main(["explain", "astrology"]) == 2
    err = capsys.readouterr().err
    assert err.count("\n") == 1


def test_small_pipeline(tmp_path):
    code, out = run(tmp_path, SMALL.format(tasks=", ".join(TASKS)))
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    res = report["results"]
    assert res["classify"]["twisted"]["class"] == "NonUniformLattice"
    assert res["classify"]["standard"]["class"] == "UniformLattice"
    assert res["covolume"]["twisted"]["levels"][2]["partial"] == "187/128"
    assert res["serre"]["all_agree"]
    gaps = [c["gap"] for c in res["spectrum"]["twisted"]["cells"]]
    assert all(g <= 1e-12 for g in gaps)
    assert res["witnesses"]["pseudo_unipotent"]["refuted"] == 100
    with open(out / "gamma_twisted.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "gamma", "alpha", "beta"] and rows[3][1] == "187/128"


def test_rationals_round_trip(tmp_path):
    code, out = run(tmp_path, SMALL.format(tasks="covolume, gamma"))
    assert code == 0
    text = (out / "report.json").read_text()
    for s in re.findall(r'"(-?\d+/\d+)"', text):
        q = Fraction(s)
        assert f"{q.numerator}/{q.denominator}" == s


def test_floats_have_17_significant_digits():
    text = cli.render_report({"x": 0.1, "y": [1.0 / 3.0], "z": float("nan")})
    data = json.loads(text)
    assert "0.10000000000000001" in text
    assert data["y"][0] == 1.0 / 3.0 and data["z"] is None


def test_empty_task_list(tmp_path):
    code, out = run(tmp_path, SMALL.format(tasks=""))
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["results"] == {}
    assert report["provenance"]["seed"] == 0
    assert len(report["provenance"]["config_sha256"]) == 64


def test_small_q_is_a_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, SMALL.replace("5, 11, 17", "3, 11, 17").format(tasks="covolume"))
    assert code == 2
    assert "exceed 4" in capsys.readouterr().err


@pytest.mark.parametrize("edit", [
    lambda t: t.replace("twisted:standard", "twisted:ghost"),
    lambda t: t.replace("111 all_in", "11 all_in"),
    lambda t: t.replace("[sequence]", "[nothing]"),
    lambda t: t + "\n[caps]\npoint_count = 0\n",
])
def test_config_errors(tmp_path, edit, capsys):
    code, _ = run(tmp_path, edit(SMALL.format(tasks="classify")))
    assert code == 2
    assert capsys.readouterr().err.count("\n") == 1


def test_unknown_task(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(SMALL.format(tasks="classify, tarot"))


def test_missing_config(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.cfg")]) == 2


def test_cap_violation(tmp_path, capsys):
    text = SMALL.format(tasks="spectrum") + "\n[caps]\npoint_count = 10\n"
    code, _ = run(tmp_path, text)
    assert code == 3
    assert "cap" in capsys.readouterr().err


def test_invariant_failure(tmp_path, monkeypatch):
    monkeypatch.setattr(runner, "serre_closed_form", lambda *a: Fraction(-1))
    code, _ = run(tmp_path, SMALL.format(tasks="serre"))
    assert code == 4


def test_jobs_do_not_change_output(tmp_path):
    text = SMALL.format(tasks="spectrum, folner, ergodicity")
    cfg = write_cfg(tmp_path, text)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_bundled_config_exists():
    path = Path(latlab.__file__).parent / "configs" / "nonuniform_suite.cfg"
    cfg = parse_config(path.read_text())
    assert cfg.seq.values == (5, 11, 17, 29)
