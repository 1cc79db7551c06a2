"""Barrier profile, rescaled velocity U and the ratio constant c.

The barrier is ``phi(t, x) = a(t)^p f(x / a(t))`` with ``f(z) = (z+1)^p - 1``.
Its velocity is self-similar, ``-u[phi](x) = a^(1-g+p) U(x/a)``, and the
barrier is a strict subsolution as long as ``c0 < R(z)`` for every ``z > 0``,
where ``R = U f' / (-p f + z f')``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .biot_savart import odd_kernel
from .parallel import ordered_map
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    integrate_endpoint_singular,
    integrate_smooth,
    integrate_tail,
)


class BarrierError(ValueError):
    """Invalid barrier parameters or a broken barrier invariant."""


# -- closed forms ------------------------------------------------------------

def f_profile(z, p: float):
    """``(z+1)^p - 1``, evaluated without cancellation near ``z = 0``."""
    z = np.asarray(z, dtype=float)
    out = np.expm1(p * np.log1p(z))
    return out if out.ndim else float(out)


def f_prime(z, p: float):
    z = np.asarray(z, dtype=float)
    out = p * (z + 1.0) ** (p - 1.0)
    return out if out.ndim else float(out)


def phi_value(a: float, p: float, x):
    """``(x+a)^p - a^p``, the barrier at scale ``a``."""
    if not a > 0.0:
        raise BarrierError(f"scale a must be positive, got {a}")
    return a**p * f_profile(np.asarray(x, dtype=float) / a, p)


def phi_x(a: float, p: float, x):
    if not a > 0.0:
        raise BarrierError(f"scale a must be positive, got {a}")
    out = p * (np.asarray(x, dtype=float) + a) ** (p - 1.0)
    return out if out.ndim else float(out)


def profile_denominator(z, p: float):
    """``-p f(z) + z f'(z) = p (1 - (1+z)^(p-1))``, positive for ``z > 0``."""
    z = np.asarray(z, dtype=float)
    out = -p * np.expm1((p - 1.0) * np.log1p(z))
    return out if out.ndim else float(out)


def margin_epsilon_min(a0: float, p: float) -> float:
    """Smallest admissible margin: initial data must exceed ``(1+eps) phi(0, .)`` for ``eps`` above this."""
    if not 0.0 < a0 < 1.0:
        raise BarrierError(f"a0 must lie in (0, 1), got {a0}")
    return 1.0 / (1.0 - a0**p) - 1.0


def t_singular(a0: float, c0: float, p: float) -> float:
    if not (a0 > 0.0 and c0 > 0.0 and p > 0.0):
        raise BarrierError("a0, c0 and p must be positive")
    return a0**p / (p * c0)


@dataclass(frozen=True)
class Barrier:
    """Scale law ``a' = -c0 a^(1-p)``, ``a(0) = a0``; ``a`` hits zero at ``t_singular``."""

    a0: float
    c0: float
    p: float
    t_singular: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.a0 < 1.0:
            raise BarrierError(f"a0 must lie in (0, 1), got {self.a0}")
        if not self.c0 > 0.0:
            raise BarrierError(f"c0 must be positive, got {self.c0}")
        if not 0.0 < self.p < 1.0:
            raise BarrierError(f"p must lie in (0, 1), got {self.p}")
        object.__setattr__(self, "t_singular", t_singular(self.a0, self.c0, self.p))

    def a(self, t):
        return solve_a(self, t)

    def phi(self, t: float, x):
        return phi_value(self.a(t), self.p, x)


def solve_a(barrier: Barrier, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > barrier.t_singular):
        raise BarrierError(f"t must lie in [0, {barrier.t_singular}]")
    # a0 (1 - t/T)^(1/p): exact at t = 0 and t = T
    base = np.maximum(1.0 - t_arr / barrier.t_singular, 0.0)
    out = barrier.a0 * base ** (1.0 / barrier.p)
    return out if out.ndim else float(out)


# -- U and its limits -----------------------------------------------------------

def _geometric_pieces(a: float, b: float, ratio: float = 4.0) -> list[tuple[float, float]]:
    if a <= 0.0:
        raise ValueError("geometric pieces need a > 0")
    n = max(1, math.ceil(math.log(b / a) / math.log(ratio)))
    pts = np.geomspace(a, b, n + 1)
    return list(zip(pts[:-1], pts[1:]))


def kernel_moment(z: float, g, gamma: float, beta: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_0^inf K(z, y) g(y) dy`` for ``g`` smooth, ``g(y) = O(y^(1+gamma-beta))``."""
    total = 0.0
    # [0, z]: the reflected kernel is smooth, the direct one singular at y = z
    total += integrate_endpoint_singular(g, 0.5 * z, z, z, gamma, spec)
    total += integrate_endpoint_singular(g, z, 2.0 * z, z, gamma, spec)
    total += integrate_smooth(lambda y: g(y) * abs(z - y) ** -gamma, 0.0, 0.5 * z, spec)
    total -= integrate_smooth(lambda y: g(y) * (z + y) ** -gamma, 0.0, 2.0 * z, spec)
    R = max(8.0 * z, 8.0)
    for a, b in _geometric_pieces(2.0 * z, R):
        total += integrate_smooth(lambda y: g(y) * float(odd_kernel(z, y, gamma)), a, b, spec)
    total += integrate_tail(lambda y: g(y) * float(odd_kernel(z, y, gamma)), R, beta, spec)
    return total


def U_value(z: float, gamma: float, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``U(z) = int_0^inf K(z, y) f(y) dy``, with ``U(0) = 0``."""
    if z < 0.0:
        raise ValueError(f"z must be nonnegative, got {z}")
    if not 0.0 < p < gamma:
        raise BarrierError(f"need 0 < p < gamma, got p={p}, gamma={gamma}")
    if z == 0.0:
        return 0.0
    return kernel_moment(z, lambda y: f_profile(y, p), gamma, 1.0 + gamma - p, spec)


def U_prime_zero(gamma: float, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``U'(0) = 2 int_0^inf y^-g f'(y) dy`` by quadrature."""
    if not 0.0 < p < gamma:
        raise BarrierError(f"need 0 < p < gamma, got p={p}, gamma={gamma}")
    fp = lambda y: f_prime(y, p)  # noqa: E731
    total = integrate_endpoint_singular(fp, 0.0, 1.0, 0.0, gamma, spec)
    for a, b in _geometric_pieces(1.0, 64.0):
        total += integrate_smooth(lambda y: fp(y) * y**-gamma, a, b, spec)
    total += integrate_tail(lambda y: fp(y) * y**-gamma, 64.0, 1.0 + gamma - p, spec)
    return 2.0 * total


def U_asymptotic_coefficient(gamma: float, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``C = int_0^inf K(1, z) z^p dz``, the growth constant in ``U(z) ~ C z^(1-g+p)``."""
    if not 0.0 < p < gamma:
        raise BarrierError(f"need 0 < p < gamma, got p={p}, gamma={gamma}")
    return kernel_moment(1.0, lambda y: y**p, gamma, 1.0 + gamma - p, spec)


def ratio(z: float, gamma: float, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``R(z) = U(z) f'(z) / (-p f(z) + z f'(z))``."""
    if not z > 0.0:
        raise ValueError(f"z must be positive, got {z}")
    den = profile_denominator(z, p)
    if not den > 0.0:
        raise BarrierError(f"nonpositive denominator {den} at z={z}")
    return U_value(z, gamma, p, spec) * f_prime(z, p) / den


# -- the constant c ---------------------------------------------------------------

@dataclass(frozen=True)
class RatioScan:
    z_grid: np.ndarray
    ratio_values: np.ndarray
    c_estimate: float
    limit_zero: float
    limit_infinity: float
    gamma: float = math.nan
    p: float = math.nan

    def report(self) -> dict:
        return {
            "gamma": self.gamma,
            "p": self.p,
            "c_estimate": self.c_estimate,
            "limit_zero": self.limit_zero,
            "limit_infinity": self.limit_infinity,
            "min_slack": None,
            "violations": [],
        }


def _require_half(gamma: float, p: float) -> None:
    if abs(p - 0.5 * gamma) > 1e-14:
        raise BarrierError(f"the ratio has finite limits only for p = gamma/2, got p={p}, gamma={gamma}")


def ratio_limits(gamma: float, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """``(R(0+), R(inf)) = (U'(0) / (1-p), C)``."""
    _require_half(gamma, p)
    return U_prime_zero(gamma, p, spec) / (1.0 - p), U_asymptotic_coefficient(gamma, p, spec)


def compute_c(gamma: float, p: float, z_min: float = 1e-3, z_max: float = 1e3, n: int = 200,
              spec: QuadratureSpec = DEFAULT_SPEC, workers: int | None = None) -> RatioScan:
    """Minimum of ``R`` over a log grid and both analytic limits.

    An interior grid minimum is polished with a bounded scalar search between
    its neighbours, so the estimate does not depend on where the grid lands.
    """
    _require_half(gamma, p)
    if not (0.0 < z_min < z_max) or n < 2:
        raise ValueError("need 0 < z_min < z_max and n >= 2")
    z = np.geomspace(z_min, z_max, n)
    vals = np.array(ordered_map(lambda zz: ratio(zz, gamma, p, spec), z, workers))
    lim0, liminf = ratio_limits(gamma, p, spec)
    best = float(vals.min())
    i = int(np.argmin(vals))
    if 0 < i < n - 1:
        res = optimize.minimize_scalar(
            lambda s: ratio(math.exp(s), gamma, p, spec),
            bounds=(math.log(z[i - 1]), math.log(z[i + 1])),
            method="bounded", options={"xatol": 1e-6},
        )
        best = min(best, float(res.fun))
    c = min(best, lim0, liminf)
    if not c > 0.0:
        raise BarrierError(f"nonpositive ratio minimum {c}")
    return RatioScan(z, vals, c, lim0, liminf, gamma, p)


# -- supersolution certificate -------------------------------------------------------

@dataclass(frozen=True)
class SupersolutionReport:
    gamma: float
    p: float
    c0: float
    c_estimate: float
    limit_zero: float
    limit_infinity: float
    min_slack: float
    t_spread: float
    max_residual: float
    violations: tuple

    @property
    def passed(self) -> bool:
        return not self.violations

    def report(self) -> dict:
        return {
            "gamma": self.gamma,
            "p": self.p,
            "c0": self.c0,
            "c_estimate": self.c_estimate,
            "limit_zero": self.limit_zero,
            "limit_infinity": self.limit_infinity,
            "min_slack": self.min_slack,
            "t_spread": self.t_spread,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "violations": [dict(v) for v in self.violations],
        }


def check_supersolution(barrier: Barrier, gamma: float, p: float, t_samples=None, z_samples=None,
                        spec: QuadratureSpec = DEFAULT_SPEC, scan: RatioScan | None = None,
                        workers: int | None = None) -> SupersolutionReport:
    """Check ``c0 a^(1-p) < a^(1-g+p) R(z)`` on a ``(t, z)`` grid.

    The slack is reported normalised by ``a^(1-p)``, i.e. ``a^(2p-g) R(z) - c0``,
    which does not depend on ``t`` when ``p = gamma/2``.  The residual
    ``phi_t + u[phi] phi_x`` at ``x = a z`` is evaluated alongside as an
    independent sign check.
    """
    _require_half(gamma, p)
    if abs(barrier.p - p) > 1e-14:
        raise BarrierError("barrier exponent does not match p")
    if scan is None:
        scan = compute_c(gamma, p, spec=spec, workers=workers)
    if t_samples is None:
        t_samples = np.linspace(0.0, 0.99 * barrier.t_singular, 16)
    t_samples = np.asarray(t_samples, dtype=float)
    if z_samples is None:
        z = scan.z_grid
        rz = scan.ratio_values
    else:
        z = np.asarray(z_samples, dtype=float)
        rz = np.array(ordered_map(lambda zz: ratio(zz, gamma, p, spec), z, workers))
    u_over = rz * profile_denominator(z, p) / f_prime(z, p)  # U(z)

    violations = []
    slack_rows = []
    max_residual = -math.inf
    c0 = barrier.c0
    for t in t_samples:
        a = barrier.a(t)
        scale = a ** (1.0 - gamma + p) / a ** (1.0 - p)
        slack = scale * rz - c0
        slack_rows.append(slack)
        adot = -c0 * a ** (1.0 - p)
        fz = f_profile(z, p)
        fpz = f_prime(z, p)
        resid = adot * a ** (p - 1.0) * (p * fz - z * fpz) - a ** (2.0 * p - gamma) * u_over * fpz
        max_residual = max(max_residual, float(resid.max()))
        for j in np.nonzero(~(slack > 0.0))[0]:
            violations.append({"t": float(t), "z": float(z[j]), "slack": float(slack[j])})
    slack_rows = np.array(slack_rows)
    lim_slack = min(scan.limit_zero, scan.limit_infinity) - c0
    if not lim_slack > 0.0:
        violations.append({"t": None, "z": "limit", "slack": float(lim_slack)})
    spread = float(np.max(slack_rows.max(axis=0) - slack_rows.min(axis=0)))
    return SupersolutionReport(
        gamma, p, c0, scan.c_estimate, scan.limit_zero, scan.limit_infinity,
        float(min(slack_rows.min(), lim_slack)), spread, max_residual, tuple(violations),
    )


def velocity_bound_constant(gamma: float, q: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_0^inf K(1, z) (1+z)^q dz``, the constant in ``|u| <= C ||w||_q (1+x)^(1-g+q)``."""
    if not 0.0 < q < gamma:
        raise BarrierError(f"need 0 < q < gamma, got q={q}, gamma={gamma}")
    return kernel_moment(1.0, lambda y: (1.0 + y) ** q, gamma, 1.0 + gamma - q, spec)
