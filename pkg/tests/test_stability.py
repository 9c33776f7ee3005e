from __future__ import annotations

import math

import numpy as np
import pytest

from unitfields import stability
from unitfields.errors import DomainError, NumericalError
from unitfields.stability import (EXACT, PUBLISHED, BumpProfile, RadialGrid, SmoothedBump,
                                  ZeroProfile)

# frozen from a high-precision root search on the closed form (mpmath, 30 digits)
DELTA_S = 1.4710078068796718
DELTA_U = 1.6121942872755812
R0_AT_1471008 = 8.198205779930089


def test_ball_volume_examples():
    assert stability.ball_volume(0.0) == 0.0
    assert stability.ball_volume(1.0) == pytest.approx(math.pi * math.sinh(2) - 2 * math.pi, rel=1e-15)
    for rho in (1e-4, 5e-3, 0.3, 1.0, 4.0):
        q = stability.ball_volume_quadrature(rho)
        assert stability.ball_volume(rho) == pytest.approx(q, rel=1e-12)
    with pytest.raises(DomainError):
        stability.ball_volume(-1.0)


def test_ball_volume_small_radius_series_is_continuous():
    lo = stability.ball_volume(1e-2 * (1 - 1e-12))
    hi = stability.ball_volume(1e-2)
    assert hi == pytest.approx(lo, rel=1e-10)


@pytest.mark.parametrize("R,d", [(0.1, 0.1), (1.0, 1.0), (3.0, 0.5), (7.5, 2.5), (10.0, 5.0)])
def test_shell_volume_identity(R, d):
    diff = stability.ball_volume(R + d) - stability.ball_volume(R)
    assert stability.shell_volume(R, d) == pytest.approx(diff, rel=1e-12)


@pytest.mark.parametrize("R,d", [(1.0, 1.0), (0.1, 0.1), (5.0, 2.0), (10.0, 5.0), (0.3, 4.0)])
def test_shell_integrals_match_quadrature(R, d):
    sh = stability.shell_integrals(R, d)
    assert sh.max_rel_diff() < 1e-10


def test_shell_integral_example_r1_d1():
    from scipy import integrate
    sh = stability.shell_integrals(1.0, 1.0)
    ref, _ = integrate.quad(lambda r: 2 * math.pi * r * (math.cosh(2 * r) - 1), 1, 2, epsrel=1e-14)
    assert sh.I1 == pytest.approx(ref, rel=1e-10)


def test_shell_integrals_vanish_with_width():
    sh = stability.shell_integrals(1.0, 1e-9)
    assert abs(sh.I1) < 1e-6 and abs(sh.I2) < 1e-6


@pytest.mark.parametrize("rho", [0.2, 1.0, 2.5])
def test_brackets_are_antiderivatives(rho):
    h = 1e-5
    d1 = (stability._i1_bracket(rho + h) - stability._i1_bracket(rho - h)) / (2 * h)
    d2 = (stability._i2_bracket(rho + h) - stability._i2_bracket(rho - h)) / (2 * h)
    w = 2 * (math.cosh(2 * rho) - 1)          # 4 sinh^2
    assert d1 == pytest.approx(rho * w, rel=1e-7)
    assert d2 == pytest.approx(rho * rho * w, rel=1e-7)


def test_closed_form_example_r1_d1():
    expected = math.pi * (math.sinh(1) * math.cosh(3) + math.cosh(2) + 2 / 3)
    assert stability.hessian_closed_form(1.0, 1.0) == pytest.approx(expected, rel=1e-15)
    assert stability.hessian_closed_form(1.0, 1.0, EXACT) == pytest.approx(expected, rel=1e-15)
    assert stability.hessian_quadrature(1.0, 1.0) == pytest.approx(expected, rel=1e-8)


def test_published_form_sign_examples():
    for R in np.geomspace(1e-3, 50, 60):
        assert stability.hessian_closed_form(R, 3.0) < 0
        assert stability.hessian_closed_form(R, 0.5) > 0


def test_published_form_disagrees_with_quadrature_off_unit_width():
    assert stability.evaluate_hessian(1.0, 1.0).rel_diff < 1e-12
    e = stability.evaluate_hessian(10.0, 5.0)
    assert e.rel_diff > 1.0


def test_exact_form_matches_quadrature_and_shell_assembly():
    for R in (0.1, 1.0, 4.0, 10.0):
        for d in (0.1, 0.7, 1.6122, 5.0):
            q = stability.hessian_quadrature(R, d)
            assert stability.hessian_closed_form(R, d, EXACT) == pytest.approx(q, rel=1e-10)
            assert stability.hessian_from_shell_integrals(R, d) == pytest.approx(q, rel=1e-9)


def test_quadrature_sign_near_upper_threshold():
    # the direct integral stays positive here even though the published form is negative
    assert stability.hessian_quadrature(2.0, 1.6122) > 0
    assert stability.hessian_closed_form(2.0, 1.6122) < 0


def test_quadrature_zero_profile_and_bad_tol():
    assert stability.hessian_quadrature(1.0, 1.0, profile=ZeroProfile()) == 0.0
    with pytest.raises(DomainError):
        stability.hessian_quadrature(1.0, 1.0, tol=0.0)


def test_bump_profile_shape():
    b = BumpProfile(1.0, 0.5)
    rho = np.array([0.0, 0.5, 1.0, 1.25, 1.5, 2.0])
    assert np.allclose(b.value(rho), [1, 1, 1, 0.5, 0, 0])
    assert b.derivative(np.array([1.25]))[0] == pytest.approx(-2.0)
    assert b.support == 1.5


def test_smoothed_bump_close_to_bump():
    s = SmoothedBump(1.0, 1.0, 0.01)
    rho = np.linspace(0, 2.5, 1001)
    assert np.max(np.abs(s.value(rho) - BumpProfile(1.0, 1.0).value(rho))) < 0.01
    with pytest.raises(ValueError):
        SmoothedBump(1.0, 0.1, 0.2)


def test_large_and_small_r_limits():
    for d in (0.5, 1.5, 3.0):
        for form in (PUBLISHED, EXACT):
            R = 30.0
            H = stability.hessian_closed_form(R, d, form)
            pred = math.pi * math.exp(2 * R) * stability.large_r_coefficient(d, form) / (2 * d * d)
            assert H == pytest.approx(pred, rel=1e-6)
            assert stability.hessian_closed_form(1e-9, d, form) == pytest.approx(
                stability.small_r_limit(d, form), rel=1e-7)


def test_volume_growth_bound_positive():
    for R in np.geomspace(0.01, 20, 30):
        for d in np.geomspace(0.01, 10, 30):
            assert stability.volume_growth_bound(R, d) > 0


def test_thresholds():
    th = stability.find_thresholds(1e-6)
    assert th.delta_s == pytest.approx(DELTA_S, abs=1e-9)
    assert th.delta_u == pytest.approx(DELTA_U, abs=1e-9)
    assert th.delta_s < th.delta_u
    mid = 0.5 * (th.delta_s + th.delta_u)
    assert stability.hessian_closed_form(1e-3, mid) > 0
    assert stability.hessian_closed_form(40.0, mid) < 0


def test_threshold_sign_structure_on_scan():
    th = stability.find_thresholds(1e-6)
    R = np.geomspace(1e-4, stability.R_SCAN, 300)
    assert all(stability.hessian_closed_form(r, th.delta_s - 1e-5) > 0 for r in R)
    assert all(stability.hessian_closed_form(r, th.delta_u + 1e-5) < 0 for r in R)


def test_exact_form_has_no_thresholds():
    for d in (0.1, 1.0, 5.0, 20.0):
        assert all(stability.hessian_closed_form(R, d, EXACT) > 0 for R in np.geomspace(1e-3, 50, 50))
    with pytest.raises(NumericalError, match="no unique sign change"):
        stability.find_thresholds(1e-6, EXACT)


def test_find_R0():
    r = stability.find_R0(1.471008)
    assert r.R0 == pytest.approx(R0_AT_1471008, abs=1e-8)
    assert r.R0 <= 8.198206
    assert r.support_radius == pytest.approx(r.R0 + 1.471008)
    near_u = stability.find_R0(DELTA_U - 1e-4)
    assert near_u.R0 < 0.1
    with pytest.raises(DomainError):
        stability.find_R0(DELTA_S - 0.01)
    with pytest.raises(DomainError):
        stability.find_R0(DELTA_U + 0.01)


def test_hessian_surface_rows():
    rows = stability.hessian_surface([1.0, 2.0], [0.5, 1.0, 3.0])
    assert rows.shape == (6, 3)
    assert rows[0, 2] == stability.hessian_closed_form(1.0, 0.5)


def test_jacobi_pointwise_identity_at_fd_order():
    rng = np.random.default_rng(2)
    rho = rng.uniform(0.2, 1.8, 30)
    theta = rng.uniform(0, 2 * np.pi, 30)
    phi = rng.uniform(0.3, 2.8, 30)
    from unitfields import charts
    X = np.column_stack(charts.ball_polar_to_halfspace(rho, theta, phi))

    class Gauss(stability.RadialProfile):
        support = 10.0

        def value(self, r):
            return np.exp(-np.asarray(r) ** 2)

        def derivative(self, r):
            r = np.asarray(r)
            return -2 * r * np.exp(-r * r)

        def second(self, r):
            r = np.asarray(r)
            return (4 * r * r - 2) * np.exp(-r * r)

    errs = []
    for h in (1e-2, 5e-3):
        direct, reduced = stability.jacobi_density(Gauss(), X, h)
        errs.append(np.max(np.abs(direct - reduced)))
    assert errs[1] < 1e-4
    assert math.log2(errs[0] / errs[1]) >= 1.9


def test_jacobi_quadratic_form_zero_and_support():
    assert stability.jacobi_quadratic_form(ZeroProfile(), RadialGrid(1.0)) == 0.0
    with pytest.raises(DomainError):
        stability.jacobi_quadratic_form(SmoothedBump(1.0, 1.0, 0.01), RadialGrid(1.5))


def test_smoothed_bump_hessian_close_to_closed_form():
    target = stability.hessian_closed_form(1.0, 1.0)
    assert abs(stability.smoothed_hessian(1.0, 1.0, 0.01) - target) < 1e-3
