import csv
import math

import numpy as np
import pytest

from l0lms.cli import RunRequest, main, run
from l0lms.config import emit_config
from l0lms.sim import preset


def _read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_exp2_outputs(tmp_path):
    assert main(["run", "--preset", "exp2", "--runs", "2", "--seed", "1", "--out", str(tmp_path)]) == 0
    rows = _read(tmp_path / "exp2_curves.csv")
    assert rows[0] == ["iteration", "lms", "l0lms_k2e-05", "l0lms_k8e-05"]
    assert len(rows) == 1 + 5000
    energy = preset("exp2")[0][1].system.energy
    # row 0 is the all-zero filter for every algorithm
    for v in rows[1][1:]:
        assert float(v) == pytest.approx(10 * math.log10(energy), abs=1e-6)
        assert len(v.split(".")[1]) == 6
    summary = _read(tmp_path / "summary.csv")
    assert summary[0] == ["label", "level_db", "reach_iteration", "runs", "seed"]
    assert [r[0] for r in summary[1:]] == ["lms", "l0lms_k2e-05", "l0lms_k8e-05"]
    assert all(r[3] == "2" and r[4] == "1" for r in summary[1:])
    meta = (tmp_path / "exp2_meta.txt").read_text()
    assert "kappa = 8e-05" in meta and "msd = squared euclidean norm" in meta


def test_byte_identical(tmp_path):
    args = ["run", "--preset", "exp2", "--runs", "2", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("exp2_curves.csv", "summary.csv", "exp2_meta.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_exp3_summary_rows(tmp_path, monkeypatch):
    # shrink the horizon through the preset so the test stays fast
    import l0lms.cli as cli

    monkeypatch.setattr(cli, "preset", lambda i, o: preset(i, {**o, "iterations": 300}))
    assert main(["run", "--preset", "exp3", "--runs", "1", "--out", str(tmp_path)]) == 0
    assert len(_read(tmp_path / "summary.csv")) == 1 + 6


def test_config_file_and_linear(tmp_path):
    cfgs = [(lbl, c.__class__(**{**c.__dict__, "iterations": 200}), 2)
            for lbl, c, _ in preset("exp2")]
    path = tmp_path / "small.cfg"
    path.write_text(emit_config(cfgs))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"), "--linear"]) == 0
    rows = _read(tmp_path / "o" / "small_curves.csv")
    assert len(rows) == 201
    assert float(rows[1][1]) == pytest.approx(cfgs[0][1].system.energy, rel=1e-6)


def test_zero_msd_rendered_as_neg_inf(tmp_path):
    path = tmp_path / "zero.cfg"
    path.write_text("[system]\nkind = cluster\ndelay = 0\nspan = 1\ngain_db = -10000\n"
                    "[run]\nL = 4\nnoise_var = 0\niterations = 30\nruns = 1\n"
                    "[algorithm.lms]\nvariant = lms\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 0
    rows = _read(tmp_path / "zero_curves.csv")
    assert all(r[1] == "-inf" for r in rows[1:])


def test_divergence_reported(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[run]\nL = 16\niterations = 3000\nruns = 1\n"
                    "[algorithm.wild]\nvariant = lms\nmu = 5\n"
                    "[algorithm.tame]\nvariant = lms\nmu = 0.01\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 1
    summary = _read(tmp_path / "summary.csv")
    assert summary[1][0] == "wild" and summary[1][1] == "diverged"
    assert summary[2][0] == "tame" and summary[2][1] != "diverged"


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("[run]\nL = 8\nkappa = -1\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_request_needs_exactly_one_source(tmp_path):
    with pytest.raises(ValueError):
        RunRequest(tmp_path)
    with pytest.raises(ValueError):
        RunRequest(tmp_path, preset="exp1", config_path=tmp_path / "x")


def test_mutually_exclusive_flags(tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--preset", "exp1", "--config", "x", "--out", str(tmp_path)])
