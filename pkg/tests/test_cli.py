import csv
import json
import os

import pytest

from tunneltime.cli import (
    CSV_HEADER,
    ConfigError,
    build_config,
    main,
    make_parser,
    parse_config_text,
)

HERE = os.path.dirname(os.path.abspath(__file__))
SWEEP_CFG = os.path.join(HERE, os.pardir, "configs", "barrier_sweep.cfg")

SMALL = """
name = small
system = electron-barrier
center = 2.5
sweep = 0.005, 0.01   # two widths
methods = presence, narrow-limit
jobs = 1
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_config_text():
    raw = parse_config_text("# header\n a = 1 \n\nb = x, y  # trailing\n")
    assert raw == {"a": "1", "b": "x, y"}
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("no equals sign")


def test_flags_override_file():
    args = make_parser().parse_args(["sweep", "--config", "x", "--method", "evolution", "--points", "4", "--tol", "0.1"])
    raw = parse_config_text("system = electron-barrier\ncenter = 2.5\nsweep_min = 0.01\nsweep_max = 0.1\npoints = 9\nmethods = presence\ntol = 0.5")
    cfg = build_config(raw, args)
    assert cfg.methods == ["evolution"]
    assert len(cfg.sweep) == 4 and cfg.sweep[0] == pytest.approx(0.01) and cfg.sweep[-1] == pytest.approx(0.1)
    assert cfg.tol == 0.1


@pytest.mark.parametrize(
    "patch",
    ["methods =", "methods = presence, stopwatch", "system = muon", "center = -1", "sweep = 0.2, 0.1"],
)
def test_invalid_configs_exit_1(tmp_path, capsys, patch):
    key = patch.split("=")[0].strip()
    lines = [ln for ln in SMALL.splitlines() if not ln.strip().startswith(key)]
    path = write_cfg(tmp_path, "\n".join(lines + [patch]))
    assert main(["sweep", "--config", path, "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_1(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "absent.cfg")]) == 1


def test_sweep_outputs(tmp_path):
    path = write_cfg(tmp_path, SMALL)
    assert main(["sweep", "--config", path, "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "small.csv")
    assert rows[0] == CSV_HEADER and len(rows) == 5
    assert {r[5] for r in rows[1:]} == {"ok"}
    meta = json.loads((tmp_path / "small.json").read_text())
    assert meta["rows"] == 4 and meta["config"]["methods"] == ["presence", "narrow-limit"]
    script = (tmp_path / "small_plot.py").read_text()
    compile(script, "small_plot.py", "exec")
    assert "L/c" in script and "VACUUM_TIME = None" in script


def test_empty_sweep_writes_header_only(tmp_path):
    text = SMALL.replace("sweep = 0.005, 0.01   # two widths", "sweep =")
    assert main(["sweep", "--config", write_cfg(tmp_path, text), "--out", str(tmp_path)]) == 0
    assert read_rows(tmp_path / "small.csv") == [CSV_HEADER]


def test_photon_plot_marks_vacuum_time(tmp_path):
    text = "name = ph\nsystem = photon-stack\ncenter = 3.927\nsweep = 0.05\nmethods = presence\njobs = 1\n"
    assert main(["sweep", "--config", write_cfg(tmp_path, text), "--out", str(tmp_path)]) == 0
    assert "VACUUM_TIME = 16.8" in (tmp_path / "ph_plot.py").read_text()


@pytest.mark.slow
def test_barrier_config_rows(tmp_path):
    assert main(["sweep", "--config", SWEEP_CFG, "--out", str(tmp_path), "--jobs", "1"]) == 0
    rows = read_rows(tmp_path / "barrier_sweep.csv")[1:]
    assert len(rows) == 75
    assert {r[1] for r in rows} == {"presence", "second-order", "evolution"}
    assert all(not r[5].startswith("error") for r in rows)


def test_compare_exit_codes(tmp_path, capsys):
    path = write_cfg(tmp_path, SMALL)
    base = ["compare", "--config", path, "--out", str(tmp_path), "--method", "presence", "--method", "narrow-limit"]
    assert main(base + ["--tol", "1e-2"]) == 0
    assert (tmp_path / "small_compare.csv").exists()
    assert main(base + ["--tol", "1e-9"]) == 2
    assert main(["compare", "--config", path, "--method", "presence"]) == 1
    assert "exactly two" in capsys.readouterr().err


def test_evolve_writes_track(tmp_path):
    path = write_cfg(tmp_path, SMALL.replace("0.005, 0.01", "0.05"))
    assert main(["evolve", "--config", path, "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "small_track.csv")
    assert rows[0] == ["component", "t", "centroid"]
    assert {r[0] for r in rows[1:]} == {"incident", "transmitted"}


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 7
