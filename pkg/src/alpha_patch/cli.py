"""Command-line entry point.

Exit codes: 0 success, 2 a check found a violation, 1 usage/config/runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostic, exit 1 instead of argparse's 2
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=float)
    print(text)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def _config(args):
    return load_config(args.config, args.set)


def cmd_simulate(args) -> int:
    from .io import write_run
    from .solver import run

    cfg = _config(args)
    out = Path(args.out or cfg.output_directory)
    result = run(cfg)
    write_run(result, out, plots=not args.no_plots)
    s = result.summary()
    print(f"stop_reason={s['stop_reason']} stop_time={s['stop_time']:.6g} steps={s['steps']} "
          f"t_singular={s['t_singular']} output={out}")
    return EXIT_VIOLATION if result.stop_reason == "barrier_violation" else EXIT_OK


def cmd_compute_constant(args) -> int:
    from .barrier import compute_c

    cfg = _config(args)
    gamma = cfg.params.gamma if args.gamma is None else args.gamma
    p = cfg.params.p if args.p is None else args.p
    scan = compute_c(gamma, p, args.z_min, args.z_max, args.n, cfg.quadrature)
    print(f"c_estimate={scan.c_estimate:.10g} limit_zero={scan.limit_zero:.10g} "
          f"limit_infinity={scan.limit_infinity:.10g}", file=sys.stderr)
    _emit(scan.report(), args.out)
    return EXIT_OK


def cmd_barrier_check(args) -> int:
    from .barrier import Barrier, check_supersolution, compute_c

    cfg = _config(args)
    prm = cfg.params
    scan = compute_c(prm.gamma, prm.p, spec=cfg.quadrature)
    c0 = cfg.barrier.c0 if cfg.barrier.c0 is not None else 0.5 * scan.c_estimate
    barrier = Barrier(cfg.barrier.a0, c0, prm.p)
    t = np.linspace(0.0, 0.99 * barrier.t_singular, args.t_samples)
    rep = check_supersolution(barrier, prm.gamma, prm.p, t, spec=cfg.quadrature, scan=scan)
    _emit(rep.report(), args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def _barrier_profile(a: float, p: float, n: int):
    from .model import log_nodes
    from .verification import AnalyticProfile

    prof = AnalyticProfile("barrier", lambda x: (x + a) ** p - a**p, lambda x: p * (x + a) ** (p - 1.0),
                           p, -(a**p))
    return prof.sample(log_nodes(n, 1e-6 * a, 1e12 * a))


def cmd_convergence(args) -> int:
    from .verification import verify_regularization_convergence

    cfg = _config(args)
    prm = cfg.params
    omega = _barrier_profile(args.a, prm.p, args.nodes)
    rep = verify_regularization_convergence(omega, args.x, args.eps, prm.gamma, cfg.quadrature, prm.p)
    _emit(rep.to_dict(), args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_norms(args) -> int:
    from .verification import standard_family, verify_velocity_bounds

    cfg = _config(args)
    q = cfg.params.q
    rep = verify_velocity_bounds(standard_family(q), q, cfg.params.gamma, cfg.quadrature, args.nodes)
    _emit(rep.to_dict(), args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_verify(args) -> int:
    from .barrier import Barrier
    from .config import from_dict
    from .io import RunLog
    from .verification import verify_run

    run_dir = Path(args.run_dir)
    cfg_path = run_dir / "config.json"
    if not cfg_path.exists():
        raise FileNotFoundError(f"no config.json in {run_dir}")
    cfg = from_dict(json.loads(cfg_path.read_text()))
    log = RunLog.from_directory(run_dir)
    b = log.summary.get("barrier")
    barrier = None if b is None else Barrier(b["a0"], b["c0"], b["p"])
    reports = verify_run(log, cfg.params, barrier)
    _emit({"run": str(run_dir), "reports": [r.to_dict() for r in reports]}, args.out)
    for r in reports:
        line = f"{r.name}: {r.status}"
        if r.violation:
            line += f" {json.dumps(r.violation, default=float)}"
        print(line, file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="alpha-patch", description="Numerical laboratory for the 1D alpha-patch model.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_help="write the JSON report here"):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-key override, repeatable")
        p.add_argument("--out", help=out_help)
        return p

    p = common(sub.add_parser("simulate", help="run the particle solver"), "run directory")
    p.add_argument("--no-plots", action="store_true", help="skip SVG output")
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("compute-constant", help="scan the ratio and report c"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--z-min", type=float, default=1e-3)
    p.add_argument("--z-max", type=float, default=1e3)
    p.add_argument("--n", type=int, default=200)
    p.set_defaults(func=cmd_compute_constant)

    p = common(sub.add_parser("barrier-check", help="certify the supersolution inequality"))
    p.add_argument("--t-samples", type=int, default=16)
    p.set_defaults(func=cmd_barrier_check)

    p = common(sub.add_parser("convergence", help="regularized vs exact velocity"))
    p.add_argument("--x", type=_floats, default=[1.0])
    p.add_argument("--eps", type=_floats, default=[0.2, 0.1, 0.05, 0.025])
    p.add_argument("--a", type=float, default=1.0, help="barrier scale of the test profile")
    p.add_argument("--nodes", type=int, default=400)
    p.set_defaults(func=cmd_convergence)

    p = common(sub.add_parser("norms", help="weighted velocity bound ratios"))
    p.add_argument("--nodes", type=int, default=400)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("verify", help="run all post-hoc checks on a run directory")
    p.add_argument("run_dir")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError, RuntimeError, OSError) as exc:
        print(f"alpha-patch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
