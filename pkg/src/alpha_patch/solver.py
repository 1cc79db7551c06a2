"""Lagrangian particle solver and Picard iteration on the regularized flow map.

Particles carry their initial values unchanged and move with the velocity of
the profile they induce (positions as nodes, carried values as values, the
initial tail offset kept and its coefficient re-anchored at the last
particle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .barrier import Barrier, compute_c, phi_value
from .biot_savart import RegKernel, origin_strain, regularized_velocity_sweep, velocity_sweep
from .config import RunConfig
from .initial import build_initial_data
from .model import (
    OddProfile,
    graded_nodes,
    odd_profile_from_samples,
    weighted_derivative_norm,
    weighted_norm,
)
from .quadrature import DEFAULT_SPEC, QuadratureSpec

DT_MIN = 1e-10
MIN_RELATIVE_SPACING = 1e-8
STOP_REASONS = ("time_end", "slope_blowup", "resolution_exhausted", "barrier_violation",
                "ordering_violation")


class OrderingError(RuntimeError):
    """Particle positions stopped being strictly increasing."""


class PicardError(RuntimeError):
    """The Picard iteration failed (non-convergence or a folded flow map)."""

    def __init__(self, message: str, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ParticleState:
    """Particle positions (``X_0 = 0``) with their carried values and tail law.

    ``reference`` is the profile the particles were seeded from; while the
    positions still coincide with its nodes it is used verbatim, so exact
    slopes supplied with the initial data are not lost at ``t = 0``.
    """

    time: float
    positions: np.ndarray
    carried_values: np.ndarray
    tail_exponent: float
    tail_offset: float = 0.0
    reference: OddProfile | None = None

    def __post_init__(self) -> None:
        pos = _frozen(self.positions)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "carried_values", _frozen(self.carried_values))
        if pos[0] != 0.0:
            raise OrderingError("the first particle must sit at the origin")
        if not np.all(np.diff(pos) > 0.0):
            i = int(np.argmin(np.diff(pos)))
            raise OrderingError(f"particles {i} and {i + 1} crossed at t={self.time}")

    @classmethod
    def from_profile(cls, profile: OddProfile, time: float = 0.0) -> "ParticleState":
        return cls(time, profile.nodes, profile.values, profile.tail_exponent,
                   profile.tail_offset, profile)

    @cached_property
    def profile(self) -> OddProfile:
        ref = self.reference
        if ref is not None and np.array_equal(ref.nodes, self.positions):
            return ref
        return odd_profile_from_samples(self.positions, self.carried_values,
                                        self.tail_exponent, self.tail_offset)

    def moved(self, positions, time: float) -> "ParticleState":
        return ParticleState(time, positions, self.carried_values, self.tail_exponent,
                             self.tail_offset, self.reference)

    @property
    def min_relative_spacing(self) -> float:
        x = self.positions
        return float(np.min(np.diff(x) / x[1:]))


@dataclass(frozen=True)
class VelocityField:
    """Exact (``kernel is None``) or regularized velocity of particle-induced profiles."""

    gamma: float
    spec: QuadratureSpec = DEFAULT_SPEC
    kernel: RegKernel | None = None
    workers: int | None = None

    def of_profile(self, profile: OddProfile, x) -> np.ndarray:
        if self.kernel is None:
            return velocity_sweep(profile, x, self.gamma, self.spec, self.workers)
        return regularized_velocity_sweep(profile, x, self.kernel, self.spec, self.workers)

    def __call__(self, state: ParticleState) -> np.ndarray:
        return self.of_profile(state.profile, state.positions)


def advect_step(state: ParticleState, dt: float, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC,
                *, field: VelocityField | None = None, k1=None) -> ParticleState:
    """One classical RK4 step of ``X' = u(X)``; ``k1`` may be the velocity already known at ``state``."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    field = field or VelocityField(gamma, spec)
    if state.profile.is_zero:
        return state.moved(state.positions, state.time + dt)
    x0 = state.positions
    k1 = field(state) if k1 is None else np.asarray(k1, dtype=float)
    s2 = state.moved(x0 + 0.5 * dt * k1, state.time + 0.5 * dt)
    k2 = field(s2)
    s3 = state.moved(x0 + 0.5 * dt * k2, state.time + 0.5 * dt)
    k3 = field(s3)
    s4 = state.moved(x0 + dt * k3, state.time + dt)
    k4 = field(s4)
    x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    x1[0] = 0.0
    return state.moved(x1, state.time + dt)


def adaptive_dt(state: ParticleState, cfl: float, dt_max: float, velocities=None,
                gamma: float | None = None) -> float:
    """``min(dt_max, cfl / max_i |u_(i+1) - u_i| / (X_(i+1) - X_i))``.

    The bound limits how far any particle can move relative to its
    neighbour in one step, which is what keeps the ordering intact.
    """
    if velocities is None:
        if gamma is None:
            raise ValueError("need velocities or gamma")
        velocities = VelocityField(gamma)(state)
    u = np.asarray(velocities, dtype=float)
    rate = float(np.max(np.abs(np.diff(u)) / np.diff(state.positions)))
    if rate == 0.0:
        return float(dt_max)
    return float(min(dt_max, cfl / rate))


def slope_at_origin(state: ParticleState, x_max: float | None = None) -> float:
    """One-sided second-order estimate of ``w_x(0+)`` from the quadratic through the first two particles."""
    x = state.positions
    w = state.carried_values
    if x.size < 3:
        raise ValueError("need at least three particles")
    if x_max is not None and not x[2] < 0.1 * x_max:
        raise ValueError("too few particles near the origin to estimate the slope")
    x1, x2, w1, w2 = x[1], x[2], w[1], w[2]
    return float((w1 * x2 * x2 - w2 * x1 * x1) / (x1 * x2 * (x2 - x1)))


def barrier_phi(barrier: Barrier | None, t: float, x) -> np.ndarray:
    """``phi(t, x)``; the limit ``x^p`` once ``a(t)`` reaches zero, zero without a barrier."""
    x = np.asarray(x, dtype=float)
    if barrier is None:
        return np.zeros_like(x)
    if t >= barrier.t_singular:
        return x**barrier.p
    return phi_value(barrier.a(t), barrier.p, x)


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    slope_origin: float
    norm_p: float
    norm_x_pm1: float
    barrier_margin: float
    dt: float
    velocity_min: float
    strain_origin: float

    FIELDS = ("time", "slope_origin", "norm_p", "norm_x_pm1", "barrier_margin", "dt",
              "velocity_min", "strain_origin")

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)


@dataclass(frozen=True, eq=False)
class Snapshot:
    time: float
    positions: np.ndarray
    values: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True, eq=False)
class RunResult:
    config: RunConfig
    barrier: Barrier | None
    c_estimate: float | None
    records: tuple
    snapshots: tuple
    stop_reason: str
    final_state: ParticleState
    steps: int

    @property
    def stop_time(self) -> float:
        return self.final_state.time

    @property
    def t_singular(self) -> float | None:
        return None if self.barrier is None else self.barrier.t_singular

    def summary(self) -> dict:
        last = self.records[-1]
        return {
            "stop_reason": self.stop_reason,
            "stop_time": self.stop_time,
            "steps": self.steps,
            "t_singular": self.t_singular,
            "blowup_detected": self.stop_reason in ("slope_blowup", "resolution_exhausted"),
            "final_slope_origin": last.slope_origin,
            "min_barrier_margin": min(r.barrier_margin for r in self.records),
            "c_estimate": self.c_estimate,
            "barrier": None if self.barrier is None else {
                "a0": self.barrier.a0, "c0": self.barrier.c0, "p": self.barrier.p,
            },
            "gamma": self.config.params.gamma,
            "tail_exponent": self.final_state.tail_exponent,
            "tail_offset": self.final_state.tail_offset,
            "n_snapshots": len(self.snapshots),
        }


def resolve_barrier(config: RunConfig, workers: int | None = None) -> tuple[Barrier | None, float | None]:
    """Barrier from the config; ``c0 = None`` becomes half the computed ratio constant."""
    if config.initial_data.kind == "zero" and config.barrier.c0 is None:
        return None, None
    prm = config.params
    c_est = None
    c0 = config.barrier.c0
    if c0 is None:
        c_est = compute_c(prm.gamma, prm.p, spec=config.quadrature, workers=workers).c_estimate
        c0 = 0.5 * c_est
    barrier = Barrier(config.barrier.a0, c0, prm.p)
    return (None if config.initial_data.kind == "zero" else barrier), c_est


def initial_state(config: RunConfig, barrier: Barrier | None) -> ParticleState:
    nodes = graded_nodes(config.n_particles - 1, config.x_max, config.grading_power)
    profile = build_initial_data(config.initial_data.kind, config.params, barrier, nodes,
                                 config.initial_data.coefficients)
    return ParticleState.from_profile(profile)


def diagnose(state: ParticleState, u: np.ndarray, dt: float, params, barrier: Barrier | None,
             spec: QuadratureSpec) -> DiagnosticsRecord:
    prof = state.profile
    x = state.positions
    margin = float(np.min(state.carried_values[1:] - barrier_phi(barrier, state.time, x[1:])))
    return DiagnosticsRecord(
        time=state.time,
        slope_origin=slope_at_origin(state),
        norm_p=weighted_norm(prof, params.p),
        norm_x_pm1=weighted_derivative_norm(prof, params.p - 1.0),
        barrier_margin=margin,
        dt=dt,
        velocity_min=float(np.min(u)),
        strain_origin=origin_strain(prof, params.gamma, spec),
    )


def run(config: RunConfig, *, workers: int | None = None, dt_scale: float = 1.0,
        progress=None) -> RunResult:
    """Integrate until ``t_end`` or a stop condition; see ``STOP_REASONS``.

    ``dt_scale`` multiplies every adaptive step (used for step-halving studies).
    """
    prm = config.params
    barrier, c_est = resolve_barrier(config, workers)
    state = initial_state(config, barrier)
    t_end = config.t_end
    if t_end is None:
        t_end = 1.0 if barrier is None else 1.05 * barrier.t_singular
    kernel = None if config.reg_epsilon is None else RegKernel(config.reg_epsilon, prm.gamma)
    fld = VelocityField(prm.gamma, config.quadrature, kernel, workers)

    records: list[DiagnosticsRecord] = []
    snapshots: list[Snapshot] = []

    def snap(s: ParticleState) -> None:
        if snapshots and snapshots[-1].time == s.time:
            return
        phi = barrier_phi(barrier, s.time, s.positions)
        snapshots.append(Snapshot(s.time, s.positions, s.carried_values, phi))

    step = 0
    reason = None
    while reason is None:
        u = fld(state)
        dt_cfl = dt_scale * adaptive_dt(state, config.cfl, config.dt_max, u)
        remaining = t_end - state.time
        dt = min(dt_cfl, remaining)
        rec = diagnose(state, u, dt, prm, barrier, config.quadrature)
        records.append(rec)
        if progress is not None:
            progress(rec)
        if step % config.snapshot_every == 0:
            snap(state)
        if barrier is not None and not rec.barrier_margin > 0.0:
            reason = "barrier_violation"
        elif rec.slope_origin > config.stop_slope:
            reason = "slope_blowup"
        elif remaining <= 1e-12 * t_end:
            reason = "time_end"
        elif dt_cfl < DT_MIN or state.min_relative_spacing < MIN_RELATIVE_SPACING:
            reason = "resolution_exhausted"
        if reason is not None:
            break
        try:
            state = advect_step(state, dt, prm.gamma, config.quadrature, field=fld, k1=u)
        except OrderingError:
            reason = "ordering_violation"
            break
        step += 1
    snap(state)
    return RunResult(config, barrier, c_est, tuple(records), tuple(snapshots), reason, state, step)


def evolve_fixed(state: ParticleState, t_end: float, n_steps: int, field: VelocityField) -> ParticleState:
    """``n_steps`` equal RK4 steps from ``state.time`` to ``t_end``."""
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    dt = (t_end - state.time) / n_steps
    for _ in range(n_steps):
        state = advect_step(state, dt, field.gamma, field.spec, field=field)
    return state


# -- Picard iteration --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PicardResult:
    times: np.ndarray
    labels: np.ndarray
    flow: np.ndarray
    profile: OddProfile
    residuals: tuple
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    def contraction_factors(self) -> np.ndarray:
        r = np.asarray(self.residuals, dtype=float)
        return r[1:] / r[:-1]


def picard_flow_map(omega0: OddProfile, reg_epsilon: float, T: float, gamma: float,
                    n_time_nodes: int = 32, max_iter: int = 50, tol: float = 1e-8,
                    spec: QuadratureSpec = DEFAULT_SPEC, workers: int | None = None,
                    raise_on_failure: bool = True) -> PicardResult:
    """Iterate ``Phi <- z + int_0^t v_eps[w_Phi](Phi(s, z)) ds`` from ``Phi = Id``.

    ``w_Phi(t, .)`` is the profile induced by the positions ``Phi(t, z)`` and
    the carried values ``w0(z)``; the time integral is the composite
    trapezoid on ``n_time_nodes`` equally spaced nodes.
    """
    if not T > 0.0:
        raise ValueError("T must be positive")
    if n_time_nodes < 2:
        raise ValueError("need at least two time nodes")
    kernel = RegKernel(reg_epsilon, gamma)
    fld = VelocityField(gamma, spec, kernel, workers)
    times = np.linspace(0.0, T, n_time_nodes)
    z = omega0.nodes
    seed = ParticleState.from_profile(omega0)
    flow = np.tile(z, (n_time_nodes, 1))
    residuals: list[float] = []
    if omega0.is_zero:
        return PicardResult(times, z, flow, omega0, (0.0,), True)
    converged = False
    for _ in range(max_iter):
        vel = np.empty_like(flow)
        for k, t in enumerate(times):
            try:
                st = seed.moved(flow[k], t)
            except OrderingError as exc:
                raise PicardError(f"flow map folded at t={t}: {exc}", residuals) from None
            vel[k] = fld(st)
        new = z[None, :] + cumulative_trapezoid(vel, times, axis=0, initial=0.0)
        new[:, 0] = 0.0
        res = float(np.max(np.abs(new - flow)))
        residuals.append(res)
        flow = new
        if res < tol:
            converged = True
            break
    if not converged and raise_on_failure:
        raise PicardError(f"no convergence in {max_iter} iterations", residuals)
    final = seed.moved(flow[-1], T)
    return PicardResult(times, z, flow, final.profile, tuple(residuals), converged)


def profile_discrepancy(profile: OddProfile, state: ParticleState) -> float:
    """Relative sup-norm gap between ``profile`` and the particle values at their positions."""
    ref = state.carried_values
    scale = float(np.max(np.abs(ref)))
    if scale == 0.0:
        return float(np.max(np.abs(profile(state.positions))))
    return float(np.max(np.abs(profile(state.positions) - ref))) / scale
