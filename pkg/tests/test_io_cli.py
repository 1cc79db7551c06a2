from __future__ import annotations

import json

import numpy as np
import pytest

from alpha_patch import __version__
from alpha_patch.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATION, main
from alpha_patch.config import from_dict
from alpha_patch.io import DIAGNOSTIC_COLUMNS, FLOAT_FMT, SNAPSHOT_COLUMNS, RunLog, read_csv
from conftest import DEFAULT_CONFIG, ROOT


def _lines(text):
    return [ln for ln in text.splitlines() if ln.strip()]


# -- run directory ---------------------------------------------------------------------

def test_golden_columns(default_run_dir):
    assert SNAPSHOT_COLUMNS == ("t", "x", "omega", "phi", "omega_minus_phi")
    assert DIAGNOSTIC_COLUMNS == ("time", "slope_origin", "norm_p", "norm_x_pm1", "barrier_margin", "dt",
                                  "velocity_min", "strain_origin")
    for name, cols in (("snapshots.csv", SNAPSHOT_COLUMNS), ("diagnostics.csv", DIAGNOSTIC_COLUMNS)):
        header = (default_run_dir / name).read_text().splitlines()[0]
        assert header == ",".join(cols)


def test_run_directory_is_self_describing(default_run_dir, default_config):
    summary = json.loads((default_run_dir / "summary.json").read_text())
    assert summary["version"] == __version__
    for key in ("stop_reason", "stop_time", "steps", "t_singular", "tail_exponent", "tail_offset", "barrier"):
        assert key in summary
    cfg = from_dict(json.loads((default_run_dir / "config.json").read_text()))
    assert cfg == default_config
    assert sorted(p.suffix for p in default_run_dir.glob("*.svg"))


def test_csv_values_reformat_identically(default_run_dir):
    # every cell reparsed and reprinted gives the same text: the format loses nothing
    text = (default_run_dir / "snapshots.csv").read_text().splitlines()
    _, rows = read_csv(default_run_dir / "snapshots.csv")
    for line, row in zip(text[1:200], rows[:199]):
        assert line == ",".join(FLOAT_FMT % v for v in row)


def test_snapshot_columns_consistent(default_log):
    for s in default_log.snapshots:
        assert np.all(s.positions[1:] > s.positions[:-1])
        assert s.positions[0] == 0.0 and s.values[0] == 0.0


def test_from_directory_reports_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError, match="snapshots.csv"):
        RunLog.from_directory(tmp_path)


# -- CLI ----------------------------------------------------------------------------------

def test_compute_constant(capsys, tmp_path):
    out = tmp_path / "c.json"
    code = main(["compute-constant", "--config", str(DEFAULT_CONFIG), "--n", "60", "--out", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["c_estimate"] == pytest.approx(3.4960767390561593, rel=1e-6)
    assert "c_estimate=" in capsys.readouterr().err


def test_simulate_zero_config(tmp_path, capsys):
    out = tmp_path / "zero"
    code = main(["simulate", "--config", str(ROOT / "configs" / "zero.json"), "--set", "n_particles=64",
                 "--set", "dt_max=0.125", "--out", str(out), "--no-plots"])
    assert code == EXIT_OK
    assert "stop_reason=time_end" in capsys.readouterr().out
    header, rows = read_csv(out / "snapshots.csv")
    assert rows.shape[0] > 0
    for col in ("omega", "phi", "omega_minus_phi"):
        assert not np.any(rows[:, header.index(col)])
    assert not list(out.glob("*.svg"))


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["simulate", "--config", str(DEFAULT_CONFIG), "--set", "bogus=1"], "unknown configuration key"),
        (["simulate", "--config", "/nonexistent/cfg.json"], "not found"),
        (["norms", "--set", "params.p=0.2"], "gamma/2"),
        (["verify", "/nonexistent/run"], "config.json"),
    ],
)
def test_errors_exit_one_with_single_line(argv, needle, capsys):
    assert main(argv) == EXIT_ERROR
    err = _lines(capsys.readouterr().err)
    assert len(err) == 1 and needle in err[0]


def test_malformed_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["barrier-check", "--config", str(bad)]) == EXIT_ERROR
    err = _lines(capsys.readouterr().err)
    assert len(err) == 1 and "malformed" in err[0]


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["compute-constant", "--n", "many"]])
def test_usage_errors_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_ERROR
    assert len(_lines(capsys.readouterr().err)) == 1


def test_barrier_check_pass_and_fail(tmp_path, capsys):
    assert main(["barrier-check", "--config", str(DEFAULT_CONFIG), "--t-samples", "4"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] is True
    # c0 = 7 exceeds c = 3.496...
    assert main(["barrier-check", "--config", str(DEFAULT_CONFIG), "--set", "barrier.c0=7",
                 "--t-samples", "4"]) == EXIT_VIOLATION


def test_verify_clean_run(default_run_dir, capsys):
    assert main(["verify", str(default_run_dir)]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert {r["status"] for r in payload["reports"]} == {"pass"}


def test_verify_flags_injected_violation(run_copy, capsys):
    path = run_copy / "snapshots.csv"
    header, rows = read_csv(path)
    t = rows[:, 0]
    last = np.nonzero(t == t.max())[0]
    k = last[len(last) // 2]
    rows[k, 2] = 0.5 * rows[k, 3]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, rows, fmt=FLOAT_FMT, delimiter=",")
    assert main(["verify", str(run_copy)]) == EXIT_VIOLATION
    err = capsys.readouterr().err
    line = next(ln for ln in err.splitlines() if ln.startswith("verify_barrier_dominance"))
    assert "fail" in line
    violation = json.loads(line.split(" ", 2)[2])
    assert violation["t_star"] == pytest.approx(t.max())
    assert violation["margin"] < 0.0
    assert rows[k - 1, 1] <= violation["x"] <= rows[k + 1, 1]
