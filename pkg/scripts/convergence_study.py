"""Regularized vs exact velocity on the barrier profile: errors and fitted orders.

    python3 scripts/convergence_study.py --x 0.5,1,2 --eps 0.4,0.2,0.1,0.05,0.025
"""
from __future__ import annotations

import argparse

import numpy as np

from alpha_patch.model import log_nodes
from alpha_patch.verification import AnalyticProfile, verify_regularization_convergence


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--x", type=_floats, default=[1.0])
    ap.add_argument("--eps", type=_floats, default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--nodes", type=int, default=400)
    args = ap.parse_args()
    g, a = args.gamma, args.a
    p = 0.5 * g

    prof = AnalyticProfile("barrier", lambda x: (x + a) ** p - a**p, lambda x: p * (x + a) ** (p - 1.0),
                           p, -(a**p)).sample(log_nodes(args.nodes, 1e-6 * a, 1e12 * a))
    rep = verify_regularization_convergence(prof, args.x, args.eps, g, p=p, lipschitz_x=[0.1, 1.0, 10.0])
    m = rep.measured
    err = np.asarray(m["errors"])
    print(f"expected order {m['expected_order']}")
    print("eps".rjust(10) + "".join(f"{'x=' + format(x, 'g'):>14}" for x in m["x"]))
    for j, e in enumerate(m["eps"]):
        print(f"{e:10.4g}" + "".join(f"{err[i, j]:14.4e}" for i in range(err.shape[0])))
    print("order".rjust(10) + "".join(f"{o:14.4f}" for o in m["orders"]))
    print("Lipschitz ratio by eps: " + ", ".join(f"{v:.4g}" for v in m["lipschitz_ratio"]))
    print(rep.status)


if __name__ == "__main__":
    main()
