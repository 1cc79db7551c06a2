"""Scan R(z) and compare both ends with their limits and the large-z expansion.

    python3 scripts/ratio_scan.py --gamma 0.5 --n 400
"""
from __future__ import annotations

import argparse

import numpy as np

from alpha_patch.barrier import compute_c, profile_denominator, ratio


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=200)
    args = ap.parse_args()
    g = args.gamma
    p = 0.5 * g

    scan = compute_c(g, p, n=args.n)
    i = int(np.argmin(scan.ratio_values))
    print(f"gamma={g} p={p}")
    print(f"c_estimate={scan.c_estimate:.10f}  grid argmin z={scan.z_grid[i]:.4g}")
    print(f"R(0+)={scan.limit_zero:.10f}  C={scan.limit_infinity:.10f}")
    print(f"{'z':>10} {'R(z)':>12} {'rel to limit':>13} {'two-term':>12}")
    for z in (1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6, 1e8):
        r = ratio(z, g, p)
        if z < 1.0:
            print(f"{z:10.0e} {r:12.6f} {r / scan.limit_zero - 1:13.2e}")
            continue
        # U ~ C z^(1-g+p) - (2/(1-g)) z^(1-g); the denominator kept exact
        u = scan.limit_infinity * z ** (1 - g + p) - 2.0 / (1.0 - g) * z ** (1 - g)
        two = u * p * (z + 1.0) ** (p - 1.0) / profile_denominator(z, p)
        print(f"{z:10.0e} {r:12.6f} {r / scan.limit_infinity - 1:13.2e} {two:12.6f}")


if __name__ == "__main__":
    main()
