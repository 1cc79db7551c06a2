"""Run directories: CSV/JSON writers, readers and SVG plots.

Numbers are written with ``%.17g`` so a file read back reproduces the
floats bit for bit, and identical runs give byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .solver import DiagnosticsRecord, RunResult, Snapshot

SNAPSHOT_COLUMNS = ("t", "x", "omega", "phi", "omega_minus_phi")
DIAGNOSTIC_COLUMNS = DiagnosticsRecord.FIELDS
FLOAT_FMT = "%.17g"


def _write_csv(path: Path, header, rows: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        if rows.size:
            np.savetxt(fh, rows, fmt=FLOAT_FMT, delimiter=",")


def snapshot_rows(snapshots) -> np.ndarray:
    blocks = []
    for s in snapshots:
        t = np.full(s.positions.size, s.time)
        blocks.append(np.column_stack((t, s.positions, s.values, s.phi, s.values - s.phi)))
    return np.vstack(blocks) if blocks else np.zeros((0, len(SNAPSHOT_COLUMNS)))


def write_run(result: RunResult, directory: str | Path, plots: bool = True) -> Path:
    """Write snapshots, diagnostics, summary, a config copy and SVG plots."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "snapshots.csv", SNAPSHOT_COLUMNS, snapshot_rows(result.snapshots))
    diag = np.array([r.row() for r in result.records], dtype=float)
    _write_csv(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS, diag)
    summary = dict(result.summary(), version=__version__)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(result.config.to_dict(), indent=2, sort_keys=True) + "\n")
    if plots:
        from .plots import write_plots

        write_plots(result.snapshots, result.records, out)
    return out


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return header, data


@dataclass(frozen=True, eq=False)
class RunLog:
    """Logged artifacts of one run: all that the verification checks consume."""

    snapshots: tuple
    diagnostics: dict
    summary: dict

    @property
    def tail_exponent(self) -> float:
        return float(self.summary["tail_exponent"])

    @property
    def tail_offset(self) -> float:
        return float(self.summary["tail_offset"])

    @classmethod
    def from_result(cls, result: RunResult) -> "RunLog":
        diag = {name: np.array([getattr(r, name) for r in result.records]) for name in DIAGNOSTIC_COLUMNS}
        return cls(tuple(result.snapshots), diag, result.summary())

    @classmethod
    def from_directory(cls, directory: str | Path) -> "RunLog":
        d = Path(directory)
        missing = [n for n in ("snapshots.csv", "diagnostics.csv", "summary.json") if not (d / n).exists()]
        if missing:
            raise FileNotFoundError(f"run directory {d} lacks {', '.join(missing)}")
        header, rows = read_csv(d / "snapshots.csv")
        if tuple(header) != SNAPSHOT_COLUMNS:
            raise ValueError(f"unexpected snapshot columns {header}")
        snaps = []
        if rows.size:
            cuts = np.nonzero(np.diff(rows[:, 0]))[0] + 1
            for block in np.split(rows, cuts):
                snaps.append(Snapshot(float(block[0, 0]), block[:, 1], block[:, 2], block[:, 3]))
        dheader, drows = read_csv(d / "diagnostics.csv")
        if tuple(dheader) != DIAGNOSTIC_COLUMNS:
            raise ValueError(f"unexpected diagnostic columns {dheader}")
        diag = {name: drows[:, i] for i, name in enumerate(dheader)}
        summary = json.loads((d / "summary.json").read_text())
        return cls(tuple(snaps), diag, summary)
