"""Model parameters and sampled profile representations.

A profile is stored on ``x >= 0`` only: nodal values joined by cubic
Hermite pieces, continued beyond the last node by an algebraic tail
``A * y**q + B``.  The reflection to ``x < 0`` is implied by the parity of
the profile class and never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np

TAIL_CONTINUITY_TOL = 1e-6
MIN_INTERVALS = 8


class ProfileError(ValueError):
    """Raised when profile data violates a representation invariant."""


@dataclass(frozen=True)
class ModelParams:
    """Exponents of the alpha-patch model.

    ``gamma = 1 - alpha`` is the kernel exponent, ``p`` the cusp exponent of
    the barrier and ``q`` the growth class used for weighted norms.
    """

    alpha: float
    p: float
    q: float
    margin_epsilon: float
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "gamma", 1.0 - self.alpha)
        if not 0.0 < self.p < self.gamma:
            raise ValueError(f"p must lie in (0, gamma={self.gamma}), got {self.p}")
        if not 0.0 < self.q < self.gamma:
            raise ValueError(f"q must lie in (0, gamma={self.gamma}), got {self.q}")
        if not self.margin_epsilon > 0.0:
            raise ValueError(f"margin_epsilon must be positive, got {self.margin_epsilon}")

    @property
    def barrier_mode(self) -> bool:
        return abs(self.p - 0.5 * self.gamma) <= 1e-14

    def require_barrier_mode(self) -> None:
        if not self.barrier_mode:
            raise ValueError(
                f"barrier construction needs p = gamma/2 = {0.5 * self.gamma}, got p = {self.p}"
            )

    def check_margin(self, a0: float) -> None:
        bound = (1.0 - a0**self.p) ** -1 - 1.0
        if not self.margin_epsilon > bound:
            raise ValueError(
                f"margin_epsilon={self.margin_epsilon} must exceed {bound} for a0={a0}"
            )


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class _Profile:
    nodes: np.ndarray
    values: np.ndarray
    tail_exponent: float
    tail_coefficient: float
    tail_offset: float = 0.0
    slopes: np.ndarray | None = None

    parity: ClassVar[int] = 0

    def __post_init__(self) -> None:
        nodes = _readonly(self.nodes)
        values = _readonly(self.values)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if self.slopes is not None:
            slopes = _readonly(self.slopes)
            if slopes.shape != nodes.shape:
                raise ProfileError("slopes must match nodes in shape")
            object.__setattr__(self, "slopes", slopes)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise ProfileError("nodes and values must be 1-d arrays of equal length")
        if nodes.size < MIN_INTERVALS + 1:
            raise ProfileError(f"need at least {MIN_INTERVALS + 1} nodes, got {nodes.size}")
        if nodes[0] != 0.0:
            raise ProfileError("first node must be the origin")
        if not np.all(np.diff(nodes) > 0.0):
            raise ProfileError("nodes must be strictly increasing")
        if not (np.all(np.isfinite(values)) and math.isfinite(self.tail_coefficient)):
            raise ProfileError("profile data must be finite")
        end = self.tail(nodes[-1])
        if abs(end - values[-1]) > TAIL_CONTINUITY_TOL * (1.0 + abs(values[-1])):
            raise ProfileError(
                f"tail law gives {end} at x_N={nodes[-1]} but the last value is {values[-1]}"
            )

    @property
    def x_end(self) -> float:
        return float(self.nodes[-1])

    @property
    def tail_terms(self) -> tuple[tuple[float, float], ...]:
        """Tail as ``(coefficient, exponent)`` power terms."""
        terms = []
        if self.tail_coefficient != 0.0:
            terms.append((self.tail_coefficient, self.tail_exponent))
        if self.tail_offset != 0.0:
            terms.append((self.tail_offset, 0.0))
        return tuple(terms)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values) and not self.tail_terms

    def tail(self, y):
        y = np.asarray(y, dtype=float)
        return self.tail_coefficient * y**self.tail_exponent + self.tail_offset

    def tail_derivative(self, y):
        y = np.asarray(y, dtype=float)
        return self.tail_coefficient * self.tail_exponent * y ** (self.tail_exponent - 1.0)

    @cached_property
    def hermite_slopes(self) -> np.ndarray:
        if self.slopes is not None:
            return self.slopes
        return _pchip_slopes(
            self.nodes, self.values, self.parity, float(self.tail_derivative(self.x_end))
        )

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Per-interval monomial coefficients in ``(y - nodes[j])``, shape ``(N, 4)``."""
        return hermite_coefficients(self.nodes, self.values, self.hermite_slopes)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = self._eval_half(ax, derivative=False)
        if self.parity < 0:
            out = np.where(x < 0.0, -out, out)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = self._eval_half(ax, derivative=True)
        if self.parity > 0:
            out = np.where(x < 0.0, -out, out)
        return out

    def _eval_half(self, x: np.ndarray, derivative: bool) -> np.ndarray:
        nodes = self.nodes
        j = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
        c = self.coefficients[j]
        s = x - nodes[j]
        if derivative:
            inner = c[..., 1] + s * (2.0 * c[..., 2] + s * 3.0 * c[..., 3])
            beyond = self.tail_derivative(np.maximum(x, nodes[-1]))
        else:
            inner = c[..., 0] + s * (c[..., 1] + s * (c[..., 2] + s * c[..., 3]))
            beyond = self.tail(np.maximum(x, nodes[-1]))
        return np.where(x > nodes[-1], beyond, inner)


class OddProfile(_Profile):
    """Samples of an odd function on ``x >= 0``; ``values[0]`` must be zero."""

    parity: ClassVar[int] = -1

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.values[0] != 0.0:
            raise ProfileError("an odd profile must vanish at the origin")


class EvenProfile(_Profile):
    """Samples of an even function on ``x >= 0`` (e.g. the derivative of an odd profile)."""

    parity: ClassVar[int] = 1


def hermite_coefficients(nodes, values, slopes) -> np.ndarray:
    h = np.diff(nodes)
    delta = np.diff(values) / h
    d0, d1 = slopes[:-1], slopes[1:]
    c = np.empty((h.size, 4))
    c[:, 0] = values[:-1]
    c[:, 1] = d0
    c[:, 2] = (3.0 * delta - 2.0 * d0 - d1) / h
    c[:, 3] = (d0 + d1 - 2.0 * delta) / h**2
    return c


def _pchip_slopes(nodes, values, parity: int, end_slope: float) -> np.ndarray:
    # Fritsch-Butland weighted harmonic mean; a mirrored ghost interval at the
    # origin encodes the parity, the tail law fixes the slope at the last node.
    h = np.diff(nodes)
    delta = np.diff(values) / h
    h_ext = np.concatenate(([h[0]], h))
    d_ext = np.concatenate(([-parity * delta[0]], delta))
    hl, hr = h_ext[:-1], h_ext[1:]
    dl, dr = d_ext[:-1], d_ext[1:]
    w1 = 2.0 * hr + hl
    w2 = hr + 2.0 * hl
    same = (np.sign(dl) * np.sign(dr)) > 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        hm = (w1 + w2) / (w1 / dl + w2 / dr)
    slopes = np.empty(nodes.size)
    slopes[:-1] = np.where(same, hm, 0.0)
    slopes[-1] = end_slope
    return slopes


def graded_nodes(n: int, x_max: float, power: float = 3.0) -> np.ndarray:
    """``x_i = x_max * (i/n)**power`` for ``i = 0..n``."""
    return x_max * (np.arange(n + 1) / n) ** power


def log_nodes(n: int, x_min: float, x_max: float) -> np.ndarray:
    """The origin followed by ``n`` geometrically spaced nodes on ``[x_min, x_max]``."""
    return np.concatenate(([0.0], np.geomspace(x_min, x_max, n)))


def odd_profile_from_samples(nodes, values, tail_exponent: float, tail_offset: float = 0.0,
                             slopes=None) -> OddProfile:
    """Build an odd profile whose tail coefficient is anchored at the last node."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    coef = (values[-1] - tail_offset) / nodes[-1] ** tail_exponent
    return OddProfile(nodes, values, tail_exponent, float(coef), tail_offset, slopes)


def weighted_norm(profile: _Profile, s: float, tail_samples: int = 64) -> float:
    """``sup_{x >= 0} |w(x)| (1+x)^(-s)`` over nodes, tail samples and the tail limit.

    Returns ``math.inf`` when the tail grows faster than ``(1+x)^s``.
    """
    nodes, values = profile.nodes, profile.values
    best = float(np.max(np.abs(values) * (1.0 + nodes) ** (-s)))
    terms = profile.tail_terms
    if not terms:
        return best
    growth = max(e for _, e in terms)
    if s < growth - 1e-12:
        return math.inf
    y = profile.x_end * np.geomspace(1.0, 1e8, tail_samples)
    best = max(best, float(np.max(np.abs(profile.tail(y)) * (1.0 + y) ** (-s))))
    if abs(s - growth) <= 1e-12:
        best = max(best, abs(sum(c for c, e in terms if e == growth)))
    return best


def weighted_derivative_norm(profile: _Profile, s: float, tail_samples: int = 64) -> float:
    """``sup_{x >= 0} |w'(x)| (1+x)^(-s)`` from the Hermite slopes and the tail law."""
    nodes = profile.nodes
    best = float(np.max(np.abs(profile.hermite_slopes) * (1.0 + nodes) ** (-s)))
    if profile.tail_coefficient == 0.0:
        return best
    growth = profile.tail_exponent - 1.0
    if s < growth - 1e-12:
        return math.inf
    y = profile.x_end * np.geomspace(1.0, 1e8, tail_samples)
    best = max(best, float(np.max(np.abs(profile.tail_derivative(y)) * (1.0 + y) ** (-s))))
    if abs(s - growth) <= 1e-12:
        best = max(best, abs(profile.tail_coefficient * profile.tail_exponent))
    return best
