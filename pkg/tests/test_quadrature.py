from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma as gamma_fn

from alpha_patch.quadrature import (
    DEFAULT_SPEC,
    DivergentTailError,
    QuadratureError,
    QuadratureSpec,
    gauss_jacobi_unit,
    integrate_endpoint_singular,
    integrate_interior_singular,
    integrate_smooth,
    integrate_tail,
)

TOL = DEFAULT_SPEC.rel_tol


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=9)
    assert DEFAULT_SPEC.tighter().rel_tol == 0.5e-8


@pytest.mark.parametrize(
    "g, a, b, expected",
    [(lambda y: 0.0, 0.0, 1.0, 0.0), (lambda y: 1.0, 0.0, 2.0, 2.0), (lambda y: y * y, 0.0, 1.0, 1.0 / 3.0)],
)
def test_smooth_examples(g, a, b, expected):
    assert integrate_smooth(g, a, b) == pytest.approx(expected, rel=TOL, abs=1e-15)


def test_smooth_rejects_empty_interval():
    with pytest.raises(ValueError):
        integrate_smooth(lambda y: 1.0, 1.0, 1.0)


@pytest.mark.parametrize("gamma, expected", [(0.5, 2.0), (0.25, 4.0 / 3.0)])
def test_endpoint_constant(gamma, expected):
    assert integrate_endpoint_singular(lambda y: 1.0, 0.0, 1.0, 0.0, gamma) == pytest.approx(expected, rel=TOL)


def test_endpoint_linear_against_riemann_sum():
    got = integrate_endpoint_singular(lambda y: 1.0 + y, 0.0, 1.0, 0.0, 0.5)
    assert got == pytest.approx(2.0 + 2.0 / 3.0, rel=TOL)
    # brute-force midpoint sum; error ~ 2 sqrt(h) * zeta(1/2) is ~1e-3 at 1e7 points
    n = 10**7
    y = (np.arange(n) + 0.5) / n
    riemann = float(np.sum((1.0 + y) / np.sqrt(y)) / n)
    assert riemann == pytest.approx(got, rel=2e-3)


def test_endpoint_right_singularity():
    # int_0^1 y (1-y)^-g dy = B(2, 1-g)
    g = 0.3
    exact = gamma_fn(2.0) * gamma_fn(1 - g) / gamma_fn(3 - g)
    assert integrate_endpoint_singular(lambda y: y, 0.0, 1.0, 1.0, g) == pytest.approx(exact, rel=TOL)


def test_endpoint_argument_checks():
    with pytest.raises(ValueError):
        integrate_endpoint_singular(lambda y: 1.0, 0.0, 1.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        integrate_endpoint_singular(lambda y: 1.0, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate_endpoint_singular(lambda y: 1.0, 1.0, 0.0, 0.0, 0.5)


@pytest.mark.parametrize(
    "R, beta, expected", [(1.0, 2.0, 1.0), (2.0, 1.25, 2.0**-0.25 / 0.25), (3.0, 1.6, 3.0**-0.6 / 0.6)]
)
def test_tail_closed_forms(R, beta, expected):
    assert integrate_tail(lambda y: y**-beta, R, beta) == pytest.approx(expected, rel=TOL)


def test_tail_zero_and_divergent():
    assert integrate_tail(lambda y: 0.0, 1.0, 2.0) == 0.0
    with pytest.raises(DivergentTailError):
        integrate_tail(lambda y: y**-1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        integrate_tail(lambda y: y**-2.0, 0.0, 2.0)


def test_interior_singular_matches_beta_sum():
    # int_0^2 |y-1|^-g dy = 2/(1-g)
    g = 0.6
    assert integrate_interior_singular(lambda y: 1.0, 0.0, 2.0, 1.0, g) == pytest.approx(2.0 / (1 - g), rel=TOL)


def test_nonconvergence_is_reported():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-30, max_subdivisions=10)
    with pytest.raises(QuadratureError):
        integrate_smooth(lambda y: math.sin(1.0 / y) / y, 1e-6, 1.0, spec)


def test_gauss_jacobi_moments():
    t, w = gauss_jacobi_unit(12, 0.4)
    for k in range(6):
        assert float(w @ t**k) == pytest.approx(1.0 / (k + 1 - 0.4), rel=1e-13)


@given(
    c1=st.floats(-10.0, 10.0),
    c2=st.floats(-10.0, 10.0),
    k=st.floats(0.0, 3.0),
    gamma=st.floats(0.05, 0.95),
)
def test_linearity(c1, c2, k, gamma):
    g1 = lambda y: math.cos(y)  # noqa: E731
    g2 = lambda y: y**k  # noqa: E731
    i1 = integrate_endpoint_singular(g1, 0.0, 1.5, 0.0, gamma)
    i2 = integrate_endpoint_singular(g2, 0.0, 1.5, 0.0, gamma)
    both = integrate_endpoint_singular(lambda y: c1 * g1(y) + c2 * g2(y), 0.0, 1.5, 0.0, gamma)
    scale = abs(c1 * i1) + abs(c2 * i2) + 1e-12
    assert abs(both - (c1 * i1 + c2 * i2)) <= 10 * TOL * scale


@given(gamma=st.floats(0.05, 0.95), b=st.floats(0.1, 5.0), w=st.floats(0.1, 20.0))
def test_refinement_monotonicity(gamma, b, w):
    g = lambda y: math.cos(w * y) + 2.0  # noqa: E731
    coarse = integrate_endpoint_singular(g, 0.0, b, 0.0, gamma)
    fine = integrate_endpoint_singular(g, 0.0, b, 0.0, gamma, DEFAULT_SPEC.tighter())
    assert abs(fine - coarse) <= TOL * abs(fine) + DEFAULT_SPEC.abs_tol


@given(gamma=st.floats(0.05, 0.95), b=st.floats(0.01, 100.0))
def test_power_closed_form_property(gamma, b):
    got = integrate_endpoint_singular(lambda y: 1.0, 0.0, b, 0.0, gamma)
    assert got == pytest.approx(b ** (1 - gamma) / (1 - gamma), rel=TOL)


@given(R=st.floats(0.01, 100.0), beta=st.floats(1.05, 4.0))
def test_tail_closed_form_property(R, beta):
    got = integrate_tail(lambda y: y**-beta, R, beta)
    assert got == pytest.approx(R ** (1 - beta) / (beta - 1), rel=TOL)
