"""Adaptive quadrature for power-law singularities and algebraic tails.

All routines wrap QUADPACK (``scipy.integrate.quad``).  Endpoint
singularities ``|y - s|^(-gamma)`` are absorbed exactly by the substitution
``u = |y - s|^(1-gamma)``; half-line tails are compactified with
``y = R/t``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi

Integrand = Callable[[float], float]


class QuadratureError(RuntimeError):
    """Adaptive integration did not reach the requested tolerance."""


class DivergentTailError(ValueError):
    """The requested tail integral does not converge."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 50
    singular_split_radius_factor: float = 1.0

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")

    def tighter(self, factor: float = 0.5) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol * factor, self.abs_tol * factor,
                              self.max_subdivisions, self.singular_split_radius_factor)


DEFAULT_SPEC = QuadratureSpec()


def _quad(fun: Integrand, a: float, b: float, spec: QuadratureSpec) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            fun, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=spec.max_subdivisions, full_output=True,
        )
    val, err = out[0], out[1]
    # QUADPACK appends a message only when ier > 0; roundoff-limited results
    # whose error estimate is still near the target are accepted.
    if len(out) > 3 and err > 10.0 * max(spec.abs_tol, spec.rel_tol * abs(val)):
        raise QuadratureError(
            f"quad on [{a}, {b}] did not converge: value {val}, error estimate {err} ({out[3]})"
        )
    return float(val)


def integrate_smooth(g: Integrand, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    return _quad(g, a, b, spec)


def integrate_endpoint_singular(g: Integrand, a: float, b: float, s: float, gamma: float,
                                spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_a^b g(y) |y - s|^(-gamma) dy`` with ``s`` equal to ``a`` or ``b``."""
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if s not in (a, b):
        raise ValueError("the singular point must be an endpoint")
    beta = 1.0 - gamma
    expo = 1.0 / beta
    span = (b - a) ** beta
    sign = 1.0 if s == a else -1.0

    def transformed(u: float) -> float:
        return g(s + sign * u**expo) / beta

    return _quad(transformed, 0.0, span, spec)


def integrate_tail(g: Integrand, R: float, beta: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_R^inf g(y) dy`` for ``g(y) y^beta`` bounded, ``beta > 1``."""
    if not beta > 1.0:
        raise DivergentTailError(f"tail decays like y^-{beta}; need beta > 1")
    if not R > 0.0:
        raise ValueError(f"R must be positive, got {R}")
    if beta >= 2.0:
        return _quad(lambda t: g(R / t) * R / t**2, 0.0, 1.0, spec)
    scale = R ** (1.0 - beta)

    def regular(t: float) -> float:
        y = R / t
        return g(y) * y**beta * scale

    return integrate_endpoint_singular(regular, 0.0, 1.0, 0.0, 2.0 - beta, spec)


def integrate_interior_singular(g: Integrand, a: float, b: float, s: float, gamma: float,
                                spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int_a^b g(y) |y - s|^(-gamma) dy`` with ``a <= s <= b``, split at ``s``."""
    total = 0.0
    if s > a:
        total += integrate_endpoint_singular(g, a, s, s, gamma, spec)
    if s < b:
        total += integrate_endpoint_singular(g, s, b, s, gamma, spec)
    return total


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_jacobi_unit(n: int, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_0^1 t^(-mu) h(t) dt``, ``mu < 1``."""
    x, w = roots_jacobi(n, 0.0, -mu)
    return 0.5 * (x + 1.0), w * 2.0 ** (mu - 1.0)
