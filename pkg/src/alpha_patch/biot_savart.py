"""Nonlocal velocity of a sampled profile.

The velocity of an odd profile is

    u[w](x) = -int_0^inf (|y-x|^-g - (x+y)^-g) w(y) dy,

and the same integral with ``+`` between the kernels gives the gradient
``u_x`` when fed the (even) derivative profile.

Sweeps over many targets use the piecewise-cubic structure of the profile:
intervals within ``singular_split_radius_factor`` widths of a target are
integrated in closed form against the power kernel (this absorbs the
singularity exactly), the remaining intervals with Gauss-Legendre, and the
algebraic tail with a Gauss-Jacobi rule after ``y = R/t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EvenProfile, OddProfile, _Profile, hermite_coefficients
from .parallel import ordered_map
from .quadrature import (
    DEFAULT_SPEC,
    DivergentTailError,
    QuadratureSpec,
    gauss_jacobi_unit,
    gauss_legendre,
    integrate_smooth,
    integrate_tail,
)

GL_ORDER = 8
TAIL_ORDER = 24
TAIL_REACH = 4.0
TAIL_RATIO = 1.05
CHUNK = 64
WINDOW_ORDER = 32


# -- kernels ---------------------------------------------------------------

def odd_kernel(x, y, gamma: float):
    """``|y-x|^-g - (x+y)^-g`` without cancellation when ``x << y`` or ``y << x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.abs(y - x)
    m = np.minimum(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = d**-gamma * -np.expm1(-gamma * np.log1p(2.0 * m / d))
    return np.where(m <= 0.0, 0.0, out)


def even_kernel(x, y, gamma: float):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return np.abs(y - x) ** -gamma + (x + y) ** -gamma


def _odd_ratio(r, gamma):
    # ((1-r)^-g - (1+r)^-g) / r, analytic on [0, 1/4]
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0.0, r, 0.5)
    val = -(1.0 - safe) ** -gamma * np.expm1(-2.0 * gamma * np.arctanh(safe)) / safe
    return np.where(r > 0.0, val, 2.0 * gamma)


def _even_ratio(r, gamma):
    return (1.0 - r) ** -gamma + (1.0 + r) ** -gamma


# -- interval tables -------------------------------------------------------

@dataclass(frozen=True)
class _Table:
    ya: np.ndarray
    yb: np.ndarray
    coef: np.ndarray
    gl_y: np.ndarray
    gl_w: np.ndarray
    gl_val: np.ndarray
    reach: float
    terms: tuple
    parity: int


def _build_table(profile: _Profile, reach: float) -> _Table:
    nodes = profile.nodes
    coef = profile.coefficients
    r_end = TAIL_REACH * max(profile.x_end, reach)
    n_virtual = max(1, math.ceil(math.log(r_end / profile.x_end) / math.log(TAIL_RATIO)))
    vnodes = np.geomspace(profile.x_end, r_end, n_virtual + 1)
    vcoef = hermite_coefficients(vnodes, profile.tail(vnodes), profile.tail_derivative(vnodes))
    ya = np.concatenate((nodes[:-1], vnodes[:-1]))
    yb = np.concatenate((nodes[1:], vnodes[1:]))
    allcoef = np.vstack((coef, vcoef))
    xi, wi = gauss_legendre(GL_ORDER)
    half = 0.5 * (yb - ya)
    gl_y = (0.5 * (ya + yb))[:, None] + half[:, None] * xi[None, :]
    gl_w = half[:, None] * wi[None, :]
    s = gl_y - ya[:, None]
    c = allcoef[:, None, :]
    gl_val = c[..., 0] + s * (c[..., 1] + s * (c[..., 2] + s * c[..., 3]))
    nreal = nodes.size - 1
    gl_val[nreal:] = profile.tail(gl_y[nreal:])
    return _Table(ya, yb, allcoef, gl_y, gl_w, gl_val, vnodes[-1], profile.tail_terms,
                  profile.parity)


def _power_moments(ya, yb, coef, xi, gamma):
    """``int_ya^yb |y - xi|^-g P(y) dy`` for cubic ``P`` (coefficients about ``ya``)."""
    d = xi - ya
    c0, c1, c2, c3 = coef[:, 0], coef[:, 1], coef[:, 2], coef[:, 3]
    b = (
        c0 + d * (c1 + d * (c2 + d * c3)),
        c1 + d * (2.0 * c2 + 3.0 * d * c3),
        c2 + 3.0 * d * c3,
        c3,
    )
    sa = ya - xi
    sb = yb - xi
    total = np.zeros_like(sa)
    for m, bm in enumerate(b):
        e = m + 1.0 - gamma
        sgn = 1.0 if (m + 1) % 2 == 0 else None
        fa = np.abs(sa) ** e / e
        fb = np.abs(sb) ** e / e
        if sgn is None:
            fa = fa * np.sign(sa)
            fb = fb * np.sign(sb)
        total = total + bm * (fb - fa)
    return total


def _tail_integral(x: np.ndarray, table: _Table, gamma: float) -> np.ndarray:
    R = table.reach
    out = np.zeros_like(x)
    for c, e in table.terms:
        if table.parity < 0:
            mu = 1.0 + e - gamma
        else:
            mu = 2.0 + e - gamma
        if not mu < 1.0:
            raise DivergentTailError(
                f"tail exponent {e} too large for the kernel with gamma={gamma}"
            )
        t, w = gauss_jacobi_unit(TAIL_ORDER, mu)
        r = x[:, None] * t[None, :] / R
        if table.parity < 0:
            out = out + c * x * R ** (e - gamma) * (_odd_ratio(r, gamma) @ w)
        else:
            out = out + c * R ** (e + 1.0 - gamma) * (_even_ratio(r, gamma) @ w)
    return out


def _sweep_chunk(x: np.ndarray, table: _Table, gamma: float, near_factor: float) -> np.ndarray:
    ya, yb = table.ya, table.yb
    width = yb - ya
    xs = x[:, None]
    dist = np.maximum(np.maximum(ya[None, :] - xs, xs - yb[None, :]), 0.0)
    near = (dist < near_factor * width[None, :]) | (ya[None, :] + xs < near_factor * width[None, :])

    y = table.gl_y[None, :, :]
    x3 = x[:, None, None]
    if table.parity < 0:
        k = odd_kernel(x3, y, gamma)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            k = even_kernel(x3, y, gamma)
    far = np.einsum("tmg,mg->tm", np.nan_to_num(k, posinf=0.0), table.gl_w * table.gl_val)
    far[near] = 0.0
    total = far.sum(axis=1)

    ti, mi = np.nonzero(near)
    if ti.size:
        xt = x[ti]
        args = (ya[mi], yb[mi], table.coef[mi])
        minus = _power_moments(*args, xt, gamma)
        plus = _power_moments(*args, -xt, gamma)
        pair = minus + table.parity * plus
        total = total + np.bincount(ti, weights=pair, minlength=x.size)
    return total + _tail_integral(x, table, gamma)


def _kernel_sweep(profile: _Profile, xs, gamma: float, spec: QuadratureSpec,
                  workers: int | None) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < 0.0):
        raise ValueError("targets must satisfy x >= 0")
    if profile.is_zero:
        return np.zeros_like(xs)
    table = _build_table(profile, float(xs.max(initial=0.0)))
    chunks = [xs[i:i + CHUNK] for i in range(0, xs.size, CHUNK)]
    f = spec.singular_split_radius_factor
    parts = ordered_map(lambda c: _sweep_chunk(c, table, gamma, f), chunks, workers)
    return np.concatenate(parts) if parts else np.zeros(0)


def _check_tail(profile: _Profile, gamma: float) -> None:
    if profile.tail_terms and profile.tail_exponent >= gamma and profile.parity < 0:
        raise DivergentTailError(
            f"tail exponent q={profile.tail_exponent} must be below gamma={gamma}"
        )


# -- public velocity surface ----------------------------------------------

def velocity_sweep(omega: OddProfile, xs, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC,
                   workers: int | None = None) -> np.ndarray:
    """``u[omega]`` at every target in ``xs``; results independent of ``workers``."""
    _check_tail(omega, gamma)
    out = -_kernel_sweep(omega, xs, gamma, spec, workers)
    return np.where(np.atleast_1d(xs) == 0.0, 0.0, out)


def velocity(omega: OddProfile, x: float, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return float(velocity_sweep(omega, [x], gamma, spec, workers=1)[0])


def velocity_x_sweep(omega_x: EvenProfile, xs, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC,
                     workers: int | None = None) -> np.ndarray:
    """``u_x = -int_0^inf w_x(y) (|x-y|^-g + (x+y)^-g) dy`` from the even derivative profile."""
    return -_kernel_sweep(omega_x, xs, gamma, spec, workers)


def velocity_x(omega_x: EvenProfile, x: float, gamma: float,
               spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return float(velocity_x_sweep(omega_x, [x], gamma, spec, workers=1)[0])


def origin_strain(omega: OddProfile, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``-u_x[omega](0) = 2 g int_0^inf omega(y) y^(-1-g) dy``.

    Integrating by parts turns the gradient at the origin into a moment of the
    profile itself, so no derivative profile is needed.
    """
    _check_tail(omega, gamma)
    if omega.is_zero:
        return 0.0
    table = _build_table(omega, omega.x_end)
    ya, yb, coef = table.ya, table.yb, table.coef
    near = ya < spec.singular_split_radius_factor * (yb - ya)
    far_vals = (table.gl_w * table.gl_val * table.gl_y ** (-1.0 - gamma)).sum(axis=1)
    total = far_vals[~near].sum()
    for j in np.nonzero(near)[0]:
        d = -ya[j]
        c0, c1, c2, c3 = coef[j]
        b = (c0 + d * (c1 + d * (c2 + d * c3)), c1 + d * (2 * c2 + 3 * d * c3), c2 + 3 * d * c3, c3)
        for m, bm in enumerate(b):
            if m == 0 and ya[j] == 0.0:
                continue
            e = m - gamma
            total += bm * (yb[j] ** e - ya[j] ** e) / e
    R = table.reach
    for c, e in table.terms:
        total += c * R ** (e - gamma) / (gamma - e)
    return 2.0 * gamma * float(total)


# -- regularized kernel ----------------------------------------------------

def eta(z):
    """Plateau-to-identity transition: 3/4 on [0, 3/4], z on [1, inf), C^2 quintic between."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise ValueError("eta is defined for z >= 0")
    s = np.clip(4.0 * (z - 0.75), 0.0, 1.0)
    mid = 0.75 + 0.25 * s**3 * (6.0 - 8.0 * s + 3.0 * s**2)
    out = np.where(z <= 0.75, 0.75, np.where(z >= 1.0, z, mid))
    return out if out.ndim else float(out)


def eta_prime(z):
    z = np.asarray(z, dtype=float)
    s = np.clip(4.0 * (z - 0.75), 0.0, 1.0)
    mid = s**2 * (18.0 - 32.0 * s + 15.0 * s**2)
    out = np.where(z <= 0.75, 0.0, np.where(z >= 1.0, 1.0, mid))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RegKernel:
    """``k_eps(z) = (eps * eta(|z|/eps))^-gamma``."""

    reg_epsilon: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.reg_epsilon > 0.0:
            raise ValueError("reg_epsilon must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")

    def __call__(self, z):
        e = self.reg_epsilon
        return (e * eta(np.abs(np.asarray(z, dtype=float)) / e)) ** -self.gamma

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        e = self.reg_epsilon
        a = np.abs(z) / e
        return -self.gamma * (e * eta(a)) ** (-self.gamma - 1.0) * eta_prime(a) * np.sign(z)

    @property
    def breakpoints(self) -> tuple[float, float]:
        return 0.75 * self.reg_epsilon, self.reg_epsilon

    def odd_pair(self, x, y):
        """``k_eps(x-y) - k_eps(x+y)``; the exact stable kernel once ``y >= x + eps``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        far = y >= x + self.reg_epsilon
        return np.where(far, odd_kernel(x, y, self.gamma), self(x - y) - self(x + y))

    def odd_pair_x(self, x, y):
        """``x``-derivative of :meth:`odd_pair`."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = self.gamma
        far = y >= x + self.reg_epsilon
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = g * (np.abs(y - x) ** (-g - 1.0) + (x + y) ** (-g - 1.0))
        return np.where(far, exact, self.derivative(x - y) - self.derivative(x + y))


def _segments(omega: _Profile, x: float, kernel: RegKernel) -> tuple[np.ndarray, float]:
    e34, e1 = kernel.breakpoints
    reach = TAIL_REACH * max(omega.x_end, x + e1)
    extra = [x - e1, x - e34, x, x + e34, x + e1, e34 - x, e1 - x]
    pts = np.concatenate((omega.nodes, extra, np.geomspace(omega.x_end, reach, 24)))
    pts = np.unique(pts[(pts >= 0.0) & (pts <= reach)])
    return pts, reach


def _regularized_integral(omega: _Profile, x: float, kernel: RegKernel, pair,
                          spec: QuadratureSpec) -> float:
    # int_0^inf pair(x, y) w(y) dy; the pair kernel is bounded, the tail decays like y^(q-1-g)
    pts, reach = _segments(omega, x, kernel)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate_smooth(lambda y: float(pair(x, y) * omega(y)), a, b, spec)
    if omega.tail_terms:
        beta = 1.0 + kernel.gamma - omega.tail_exponent
        total += integrate_tail(lambda y: float(pair(x, y) * omega.tail(y)), reach, beta, spec)
    return total


def regularized_velocity(omega: OddProfile, x: float, kernel: RegKernel,
                         spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``v_eps[omega](x) = -int_0^inf (k_eps(x-y) - k_eps(x+y)) omega(y) dy`` by adaptive quadrature."""
    _check_tail(omega, kernel.gamma)
    if x == 0.0 or omega.is_zero:
        return 0.0
    return -_regularized_integral(omega, x, kernel, kernel.odd_pair, spec)


def regularized_velocity_x(omega: OddProfile, x: float, kernel: RegKernel,
                           spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``d/dx v_eps`` through the bounded derivative kernel, so no derivative profile is needed."""
    _check_tail(omega, kernel.gamma)
    if omega.is_zero:
        return 0.0
    return -_regularized_integral(omega, x, kernel, kernel.odd_pair_x, spec)


def _window_correction(omega: _Profile, xs: np.ndarray, kernel: RegKernel) -> np.ndarray:
    # v_eps - u = -eps^(1-g) int_{-1}^{1} (eta(|w|)^-g - |w|^-g) omega(x + eps w) dw
    g, e = kernel.gamma, kernel.reg_epsilon
    xi, wi = gauss_legendre(WINDOW_ORDER)
    total = np.zeros_like(xs)
    for lo, hi in ((-1.0, -0.75), (-0.75, 0.0), (0.0, 0.75), (0.75, 1.0)):
        w = 0.5 * (hi + lo) + 0.5 * (hi - lo) * xi
        weights = 0.5 * (hi - lo) * wi * eta(np.abs(w)) ** -g
        total += omega(xs[:, None] + e * w[None, :]) @ weights
    t, wj = gauss_jacobi_unit(WINDOW_ORDER, g)
    sing = (omega(xs[:, None] + e * t[None, :]) + omega(xs[:, None] - e * t[None, :])) @ wj
    return -(e ** (1.0 - g)) * (total - sing)


def regularized_velocity_sweep(omega: OddProfile, xs, kernel: RegKernel,
                               spec: QuadratureSpec = DEFAULT_SPEC,
                               workers: int | None = None) -> np.ndarray:
    """Vectorized ``v_eps`` at many targets: exact sweep plus the compact window correction."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    u = velocity_sweep(omega, xs, kernel.gamma, spec, workers)
    if omega.is_zero:
        return u
    out = u + _window_correction(omega, xs, kernel)
    return np.where(xs == 0.0, 0.0, out)
