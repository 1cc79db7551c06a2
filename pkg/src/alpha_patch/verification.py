"""Post-hoc checks on logged runs and standalone operator checks.

Every run check consumes a :class:`~alpha_patch.io.RunLog` only; nothing here
re-runs the solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .barrier import Barrier, U_asymptotic_coefficient, U_prime_zero, velocity_bound_constant
from .biot_savart import (
    RegKernel,
    regularized_velocity,
    regularized_velocity_x,
    velocity_sweep,
    velocity_x_sweep,
)
from .io import RunLog
from .model import (
    EvenProfile,
    ModelParams,
    OddProfile,
    log_nodes,
    odd_profile_from_samples,
    weighted_norm,
)
from .parallel import ordered_map
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .solver import barrier_phi

SLOPE_ODE_TOL = 0.02
STABILITY_TOL = 0.05
APRIORI_TOL = 0.10
ORDER_BAND = 0.2


@dataclass(frozen=True)
class VerificationReport:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    violation: dict | None = None

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {"check": self.name, "status": self.status, "measured": self.measured,
                "violation": self.violation}


def _snapshot_profile(log: RunLog, snap) -> OddProfile:
    return odd_profile_from_samples(snap.positions, snap.values, log.tail_exponent, log.tail_offset)


# -- dominance -------------------------------------------------------------------

def verify_barrier_dominance(log: RunLog, barrier: Barrier, params: ModelParams | None = None,
                             workers: int | None = None) -> VerificationReport:
    """``w(t, x) > phi(t, x)`` at every positive node and interpolant midpoint of every snapshot."""
    if len(log.snapshots) < 2:
        raise ValueError("need at least two snapshots")

    def one(snap):
        prof = _snapshot_profile(log, snap)
        x = snap.positions
        mids = 0.5 * (x[:-1] + x[1:])
        pts = np.concatenate((x[1:], mids))
        gap = prof(pts) - barrier_phi(barrier, snap.time, pts)
        phi = barrier_phi(barrier, snap.time, pts)
        i = int(np.argmin(gap))
        rel = float(np.min(gap / np.where(phi > 0.0, phi, np.inf)))
        return float(gap[i]), float(pts[i]), rel, prof

    results = ordered_map(one, log.snapshots, workers)
    margins = [r[0] for r in results]
    bad = [k for k, m in enumerate(margins) if not m > 0.0]
    final = results[-1][3]
    measured = {
        "min_margin": float(min(margins)),
        "min_relative_margin": float(min(r[2] for r in results)),
        "snapshots": len(margins),
        # w - phi grows like (A - 1) x^p at large x since phi <= (x + a0)^p
        "tail_margin_coefficient": float(final.tail_coefficient - 1.0),
    }
    if not bad:
        return VerificationReport("verify_barrier_dominance", True, measured)
    k = bad[0]
    violation = {"t_star": log.snapshots[k].time, "x": results[k][1], "margin": margins[k]}
    return VerificationReport("verify_barrier_dominance", False, measured, violation)


# -- velocity bounds ----------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticProfile:
    """Closed-form odd test profile with derivatives and algebraic tail ``~ A x^q + B``."""

    name: str
    value: Callable
    d1: Callable
    tail_exponent: float
    tail_offset: float = 0.0
    d2: Callable | None = None
    d3: Callable | None = None

    def sample(self, nodes) -> OddProfile:
        v = self.value(nodes)
        v[0] = 0.0
        return odd_profile_from_samples(nodes, v, self.tail_exponent, self.tail_offset, self.d1(nodes))

    def sample_x(self, nodes) -> EvenProfile:
        v = self.d1(nodes)
        e = self.tail_exponent - 1.0
        return EvenProfile(nodes, v, e, float(v[-1] / nodes[-1] ** e), 0.0, self.d2(nodes))

    def sample_xx(self, nodes) -> OddProfile:
        v = self.d2(nodes)
        if abs(v[0]) > 1e-14:
            raise ValueError(f"{self.name}: second derivative does not vanish at the origin")
        v[0] = 0.0
        return odd_profile_from_samples(nodes, v, self.tail_exponent - 2.0, 0.0, self.d3(nodes))


def standard_family(q: float, a: float = 1.0) -> list[AnalyticProfile]:
    """``x (1+x)^(q-1)``, the barrier ``(x+a)^q - a^q`` and ``x (1+x^2)^((q-1)/2)``."""
    return [
        AnalyticProfile(
            "power_ratio",
            lambda x: x * (1.0 + x) ** (q - 1.0),
            lambda x: (1.0 + x) ** (q - 2.0) * (1.0 + q * x),
            q,
            d2=lambda x: (q - 1.0) * (1.0 + x) ** (q - 3.0) * (2.0 + q * x),
        ),
        AnalyticProfile(
            "barrier",
            lambda x: (x + a) ** q - a**q,
            lambda x: q * (x + a) ** (q - 1.0),
            q,
            -(a**q),
            d2=lambda x: q * (q - 1.0) * (x + a) ** (q - 2.0),
        ),
        AnalyticProfile(
            "smooth_rational",
            lambda x: x * (1.0 + x * x) ** (0.5 * (q - 1.0)),
            lambda x: (1.0 + x * x) ** (0.5 * (q - 3.0)) * (1.0 + q * x * x),
            q,
            d2=lambda x: (q - 1.0) * x * (1.0 + x * x) ** (0.5 * (q - 5.0)) * (3.0 + q * x * x),
            d3=lambda x: (q - 1.0) * (1.0 + x * x) ** (0.5 * (q - 7.0))
            * (3.0 + (6.0 * q - 12.0) * x * x + (q * q - 2.0 * q) * x**4),
        ),
    ]


def _bound_ratios(prof: AnalyticProfile, nodes, gamma: float, c_asym: float,
                  spec: QuadratureSpec) -> dict:
    q = prof.tail_exponent
    s = 1.0 - gamma + q
    om = prof.sample(nodes)
    out = {}
    if om.is_zero:
        return out
    x = nodes[1:]
    A = om.tail_coefficient
    u = velocity_sweep(om, x, gamma, spec)
    num = max(float(np.max(np.abs(u) * (1.0 + x) ** -s)), abs(A) * c_asym)
    out["line1"] = num / weighted_norm(om, q)
    ox = prof.sample_x(nodes)
    ux = velocity_x_sweep(ox, nodes, gamma, spec)
    num = max(float(np.max(np.abs(ux) * (1.0 + nodes) ** -(s - 1.0))), abs(A) * c_asym * s)
    out["line2"] = num / weighted_norm(ox, q - 1.0)
    if prof.d2 is not None and prof.d3 is not None:
        oxx = prof.sample_xx(nodes)
        uxx = velocity_sweep(oxx, x, gamma, spec)
        num = max(float(np.max(np.abs(uxx) * (1.0 + x) ** -(s - 2.0))),
                  abs(A) * c_asym * s * abs(q - gamma))
        out["line3"] = num / weighted_norm(oxx, q - 2.0)
    return out


def verify_velocity_bounds(profiles: Sequence[AnalyticProfile], q: float, gamma: float,
                           spec: QuadratureSpec = DEFAULT_SPEC, n_nodes: int = 400,
                           x_range: tuple[float, float] = (1e-4, 1e6),
                           workers: int | None = None) -> VerificationReport:
    """Ratios of weighted norms of ``u, u_x, u_xx`` to those of ``w, w_x, w_xx``.

    Each ratio is measured on ``n_nodes`` and ``2 n_nodes`` log-spaced nodes;
    the sup includes the exact large-``x`` limit of the velocity norm.
    """
    if not 0.0 < q < gamma:
        raise ValueError(f"need 0 < q < gamma, got q={q}")
    for prof in profiles:
        if not prof.tail_exponent < gamma:
            raise ValueError(f"{prof.name}: tail exponent must be below gamma")
    c_asym = U_asymptotic_coefficient(gamma, q, spec)
    bound = velocity_bound_constant(gamma, q, spec)
    coarse = log_nodes(n_nodes, *x_range)
    fine = log_nodes(2 * n_nodes, *x_range)
    jobs = [(p, n) for p in profiles for n in (coarse, fine)]
    vals = ordered_map(lambda job: _bound_ratios(job[0], job[1], gamma, c_asym, spec), jobs, workers)
    table = {}
    passed = True
    violation = None
    for k, prof in enumerate(profiles):
        r1, r2 = vals[2 * k], vals[2 * k + 1]
        if not r1:
            table[prof.name] = {"skipped": "zero profile"}
            continue
        entry = {}
        for line in r1:
            change = abs(r2[line] / r1[line] - 1.0)
            ok = math.isfinite(r1[line]) and change <= STABILITY_TOL
            entry[line] = {"ratio": r1[line], "refined": r2[line], "change": change}
            if not ok and violation is None:
                violation = {"profile": prof.name, "line": line, "change": change}
            passed &= ok
        table[prof.name] = entry
    max_ratio = {}
    for entry in table.values():
        for line, d in entry.items():
            if isinstance(d, dict):
                max_ratio[line] = max(max_ratio.get(line, 0.0), d["refined"])
    measured = {"ratios": table, "max_ratio": max_ratio, "line1_constant": bound,
                "asymptotic_coefficient": c_asym}
    barrier_entry = table.get("barrier", {}).get("line1")
    if barrier_entry is not None and barrier_entry["refined"] > bound:
        passed = False
        violation = violation or {"profile": "barrier", "line": "line1",
                                  "ratio": barrier_entry["refined"], "bound": bound}
    return VerificationReport("verify_velocity_bounds", passed, measured, violation)


# -- origin slope ---------------------------------------------------------------------

def verify_origin_slope_ode(diagnostics: dict, tol: float = SLOPE_ODE_TOL, barrier: Barrier | None = None,
                            gamma: float | None = None) -> VerificationReport:
    """``ln w_x(t,0)`` against the trapezoidal integral of the logged ``-u_x(t, 0)``.

    With a barrier, also checks ``-u_x[w](0) >= -u_x[phi](0) = a^(p-g) U'(0)``.
    """
    t = np.asarray(diagnostics["time"], dtype=float)
    s = np.asarray(diagnostics["slope_origin"], dtype=float)
    k = np.asarray(diagnostics["strain_origin"], dtype=float)
    if t.size < 10:
        raise ValueError("need at least ten diagnostic records")
    if np.all(s == 0.0) and np.all(k == 0.0):
        return VerificationReport("verify_origin_slope_ode", True,
                                  {"delta_log_slope": 0.0, "strain_integral": 0.0, "deviation": 0.0})
    if np.any(s <= 0.0):
        raise ValueError("slope at the origin must stay positive")
    lhs = float(math.log(s[-1] / s[0]))
    rhs = float(trapezoid(k, t))
    dev = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    measured = {"delta_log_slope": lhs, "strain_integral": rhs, "deviation": dev, "tolerance": tol}
    passed = dev <= tol
    violation = None if passed else {"t": [float(t[0]), float(t[-1])], "deviation": dev}
    if barrier is not None:
        if gamma is None:
            raise ValueError("gamma is needed for the comparison check")
        u0 = U_prime_zero(gamma, barrier.p)
        tt = np.minimum(t, barrier.t_singular)
        a = np.array([barrier.a(v) for v in tt])
        with np.errstate(divide="ignore"):
            phi_strain = a ** (barrier.p - gamma) * u0
        gap = k - phi_strain
        measured["comparison_min_gap"] = float(np.min(gap))
        if not np.all(gap >= 0.0):
            passed = False
            i = int(np.argmin(gap))
            violation = violation or {"t": float(t[i]), "comparison_gap": float(gap[i])}
    return VerificationReport("verify_origin_slope_ode", passed, measured, violation)


# -- regularization -------------------------------------------------------------------------

def verify_regularization_convergence(omega: OddProfile, xs, eps_seq, gamma: float,
                                      spec: QuadratureSpec = DEFAULT_SPEC, p: float | None = None,
                                      lipschitz_x=None, workers: int | None = None) -> VerificationReport:
    """Error ``|v_eps - u|`` per ``(x, eps)``, its fitted order and the growth of ``||d_x v_eps||``."""
    eps = np.asarray(eps_seq, dtype=float)
    if eps.size < 4 or not np.all(np.diff(eps) < 0.0):
        raise ValueError("need at least four strictly decreasing eps values")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    p = omega.tail_exponent if p is None else p
    fine = QuadratureSpec(1e-10, 1e-14, max(spec.max_subdivisions, 100), spec.singular_split_radius_factor)
    u = velocity_sweep(omega, xs, gamma, fine)
    jobs = [(x, e) for x in xs for e in eps]
    vals = ordered_map(lambda j: regularized_velocity(omega, j[0], RegKernel(j[1], gamma), spec), jobs, workers)
    err = np.abs(np.array(vals).reshape(xs.size, eps.size) - u[:, None])
    target = 1.0 - gamma
    orders = []
    passed = True
    for row in err:
        if np.all(row < 1e-14):
            orders.append(math.nan)
            continue
        slope = float(np.polyfit(np.log(eps), np.log(row), 1)[0])
        orders.append(slope)
        passed &= abs(slope - target) <= ORDER_BAND
        passed &= bool(np.all(np.diff(row) < 0.0))
    if lipschitz_x is None:
        lipschitz_x = np.geomspace(1e-2, 1e2, 9)
    lx = np.asarray(lipschitz_x, dtype=float)
    norm = weighted_norm(omega, p)
    lip = []
    for e in eps:
        kern = RegKernel(float(e), gamma)
        d = np.array(ordered_map(lambda x: regularized_velocity_x(omega, x, kern, spec), lx, workers))
        lip.append(float(np.max(np.abs(d) * (1.0 + lx) ** (gamma - p))) / norm if norm else 0.0)
    lip_growing = bool(np.all(np.diff(lip) > 0.0))
    passed &= lip_growing
    measured = {
        "x": xs.tolist(), "eps": eps.tolist(), "errors": err.tolist(), "orders": orders,
        "expected_order": target, "lipschitz_ratio": lip, "lipschitz_increasing": lip_growing,
    }
    return VerificationReport("verify_regularization_convergence", bool(passed), measured,
                              None if passed else {"orders": orders})


# -- a-priori monitor ------------------------------------------------------------------------

def apriori_monitor(log: RunLog, params: ModelParams) -> VerificationReport:
    """Empirical constant ``K`` in ``|d/dt ((1+X)^-p w)| <= K ||w||_p^2`` along particle paths.

    ``K`` is the largest finite-difference rate over consecutive snapshots,
    divided by the squared norm at the start of the interval; it is compared
    between the first and second half of the logged intervals.
    """
    p = params.p
    snaps = log.snapshots
    if len(snaps) < 3:
        raise ValueError("need at least three snapshots")
    ks = []
    min_rate = math.inf
    for s0, s1 in zip(snaps[:-1], snaps[1:]):
        dt = s1.time - s0.time
        w0 = (1.0 + s0.positions) ** -p * s0.values
        w1 = (1.0 + s1.positions) ** -p * s1.values
        rate = (w1 - w0) / dt
        min_rate = min(min_rate, float(rate.min()))
        norm = weighted_norm(_snapshot_profile(log, s0), p)
        ks.append(float(np.max(np.abs(rate))) / norm**2 if norm > 0.0 else 0.0)
    half = len(ks) // 2
    k1 = max(ks[:half]) if half else ks[0]
    k2 = max(ks[half:])
    if k1 == 0.0 and k2 == 0.0:
        change = 0.0
    else:
        change = abs(k2 / k1 - 1.0) if k1 > 0.0 else math.inf
    passed = change <= APRIORI_TOL
    measured = {"K_first_half": k1, "K_second_half": k2, "relative_change": change,
                "K_per_interval": ks, "min_signed_rate": min_rate}
    return VerificationReport("apriori_monitor", passed, measured,
                              None if passed else {"relative_change": change})


def verify_run(log: RunLog, params: ModelParams, barrier: Barrier | None) -> list[VerificationReport]:
    """All post-hoc checks that apply to a logged run."""
    reports = []
    if barrier is not None:
        reports.append(verify_barrier_dominance(log, barrier, params))
    reports.append(verify_origin_slope_ode(log.diagnostics, barrier=barrier, gamma=params.gamma))
    reports.append(apriori_monitor(log, params))
    return reports
