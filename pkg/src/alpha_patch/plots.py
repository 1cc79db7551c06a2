"""Static SVG figures: profile overlays and the origin-slope history."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp keep the SVG bytes reproducible
matplotlib.rcParams["svg.hashsalt"] = "alpha-patch"
_META = {"Date": None}


def _pick(snapshots, count: int = 3):
    if len(snapshots) <= count:
        return list(snapshots)
    idx = np.unique(np.linspace(0, len(snapshots) - 1, count).round().astype(int))
    return [snapshots[i] for i in idx]


def profile_figure(snapshot, path: Path) -> None:
    x = snapshot.positions[1:]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, snapshot.values[1:], label="omega")
    ax.plot(x, snapshot.phi[1:], "--", label="phi")
    ax.set_xscale("log")
    ax.set_xlabel("x")
    ax.set_title(f"t = {snapshot.time:.6g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def slope_figure(records, path: Path) -> None:
    t = [r.time for r in records]
    s = [r.slope_origin for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, s, marker=".")
    if min(s) > 0.0:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("slope at origin")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def write_plots(snapshots, records, directory: Path) -> list[Path]:
    out = []
    for s in _pick(snapshots):
        path = directory / f"profiles_{s.time:.6f}.svg"
        profile_figure(s, path)
        out.append(path)
    path = directory / "diagnostics.svg"
    slope_figure(records, path)
    out.append(path)
    return out
