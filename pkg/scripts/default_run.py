"""Default scenario end to end: simulate, write the run directory, verify it.

    python3 scripts/default_run.py --out runs/default
"""
from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from alpha_patch.barrier import Barrier
from alpha_patch.config import load_config
from alpha_patch.io import RunLog, write_run
from alpha_patch.solver import run
from alpha_patch.verification import verify_run

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "default.json"))
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", default="runs/default")
    ap.add_argument("--dt-scale", type=float, default=1.0)
    args = ap.parse_args()

    cfg = load_config(args.config, args.set)
    start = time.perf_counter()
    result = run(cfg, dt_scale=args.dt_scale, progress=lambda rec: print(
        f"t={rec.time:.6f} slope={rec.slope_origin:.4g} margin={rec.barrier_margin:.3g}"))
    out = write_run(result, args.out)
    s = result.summary()
    print(f"{s['stop_reason']} at t={s['stop_time']:.6g} after {s['steps']} steps "
          f"({time.perf_counter() - start:.1f} s), T={s['t_singular']:.6g}")

    log = RunLog.from_result(result)
    b = s.get("barrier")
    barrier = None if b is None else Barrier(b["a0"], b["c0"], b["p"])
    for rep in verify_run(log, cfg.params, barrier):
        print(json.dumps(rep.to_dict(), default=float))
    print(f"written to {out}")


if __name__ == "__main__":
    main()
