"""Initial data generators and the dominance check ``w0 > (1+eps) phi(0, .)``."""
from __future__ import annotations

import numpy as np

from .barrier import Barrier, phi_value
from .model import ModelParams, OddProfile, odd_profile_from_samples

KINDS = ("barrier_multiple", "smooth_rational", "zero")
RATIONAL_HEADROOM = 1.05


class InitialDataError(ValueError):
    """The requested initial data does not dominate the barrier."""


def dominance_gap(profile: OddProfile, barrier: Barrier, eps: float, x=None) -> np.ndarray:
    """``w0(x) - (1+eps) phi(0, x)`` at ``x`` (default: the positive nodes)."""
    if x is None:
        x = profile.nodes[1:]
    x = np.asarray(x, dtype=float)
    return profile(x) - (1.0 + eps) * phi_value(barrier.a0, barrier.p, x)


def check_dominance(profile: OddProfile, barrier: Barrier, eps: float) -> float:
    """Minimum gap over positive nodes; raises naming the first violating node."""
    gap = dominance_gap(profile, barrier, eps)
    bad = np.nonzero(~(gap > 0.0))[0]
    if bad.size:
        x = profile.nodes[1 + bad[0]]
        raise InitialDataError(
            f"initial data fails w0 > (1+eps) phi(0, x) at x={x:.6g} (gap {gap[bad[0]]:.3e})"
        )
    return float(gap.min())


def _rational(x, p):
    return x * (1.0 + x * x) ** (0.5 * (p - 1.0))


def _rational_slope(x, p):
    return (1.0 + x * x) ** (0.5 * (p - 3.0)) * (1.0 + p * x * x)


def build_initial_data(kind: str, params: ModelParams, barrier: Barrier | None, nodes,
                       coefficients: dict | None = None) -> OddProfile:
    """Sample one of the named initial profiles on ``nodes``.

    ``barrier_multiple`` is ``(1+2 eps)((x+a0)^p - a0^p)``; ``smooth_rational``
    is ``A x (1+x^2)^((p-1)/2)`` with ``A`` chosen 5% above the smallest value
    that dominates the barrier (or taken from ``coefficients["scale"]``);
    ``zero`` is the trivial solution.  The first two are checked for
    dominance before they are returned.
    """
    coefficients = dict(coefficients or {})
    nodes = np.asarray(nodes, dtype=float)
    p = params.p
    eps = params.margin_epsilon
    if kind == "zero":
        if coefficients:
            raise InitialDataError("zero data takes no coefficients")
        return OddProfile(nodes, np.zeros_like(nodes), p, 0.0)
    if kind not in KINDS:
        raise InitialDataError(f"unknown initial data kind {kind!r}; expected one of {KINDS}")
    if barrier is None:
        raise InitialDataError(f"{kind} data needs a barrier")

    a0 = barrier.a0
    if kind == "barrier_multiple":
        unknown = set(coefficients) - {"multiple"}
        if unknown:
            raise InitialDataError(f"unknown coefficients {sorted(unknown)}")
        m = float(coefficients.get("multiple", 1.0 + 2.0 * eps))
        values = m * phi_value(a0, p, nodes)
        slopes = m * p * (nodes + a0) ** (p - 1.0)
        profile = odd_profile_from_samples(nodes, values, p, -m * a0**p, slopes)
    else:
        unknown = set(coefficients) - {"scale"}
        if unknown:
            raise InitialDataError(f"unknown coefficients {sorted(unknown)}")
        shape = _rational(nodes[1:], p)
        target = (1.0 + eps) * phi_value(a0, p, nodes[1:])
        scale = coefficients.get("scale")
        if scale is None:
            # the tail ratio tends to (1+eps) from above, so the node maximum covers it
            scale = RATIONAL_HEADROOM * float(np.max(target / shape))
        values = float(scale) * _rational(nodes, p)
        slopes = float(scale) * _rational_slope(nodes, p)
        profile = odd_profile_from_samples(nodes, values, p, 0.0, slopes)
    check_dominance(profile, barrier, eps)
    return profile
