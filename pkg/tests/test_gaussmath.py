"""Tests for the scalar normal functions and the adaptive quadrature."""

import math

import numpy as np
import pytest

from hfcopula.gaussmath import (
    QuadratureConfig,
    QuadratureError,
    integrate,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)

# high-precision reference values (mpmath, 40 digits)
PHI_MINUS_8 = 6.220960574271784e-16
PHI_MINUS_3 = 0.0013498980316300945
PHI_1_959964 = 0.9750000009035576
QUANTILE_975 = 1.9599639845400542
QUANTILE_123 = -1.1601198829975195
# int_0^1 Phi(x) dx = Phi(1) + phi(1) - phi(0), by parts
INT_PHI_0_1 = 0.6843731901862536


def test_cdf_at_zero():
    assert std_normal_cdf(0.0) == 0.5


def test_cdf_far_right_tail():
    assert abs(std_normal_cdf(10.0) - 1.0) <= 1e-16


def test_cdf_reference_points():
    assert abs(std_normal_cdf(1.959964) - PHI_1_959964) <= 1e-6
    assert abs(std_normal_cdf(-3.0) - PHI_MINUS_3) <= 1e-15
    assert std_normal_cdf(-8.0) == pytest.approx(PHI_MINUS_8, rel=1e-12)


def test_cdf_complement_identity():
    for x in (-7.3, -2.0, -0.1, 0.4, 1.9, 6.6):
        assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-15


def test_cdf_monotone_on_sorted_sample():
    rng = np.random.default_rng(7)
    xs = np.sort(rng.standard_normal(10_000) * 3.0)
    vals = [std_normal_cdf(float(x)) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_pdf_values():
    assert std_normal_pdf(0.0) == 0.3989422804014327
    assert std_normal_pdf(1.7) == std_normal_pdf(-1.7)
    assert std_normal_pdf(40.0) == 0.0  # graceful underflow, no exception


def test_quantile_median():
    assert std_normal_quantile(0.5) == 0.0


def test_quantile_reference_points():
    assert abs(std_normal_quantile(0.975) - 1.959964) <= 1e-6
    assert std_normal_quantile(0.975) == pytest.approx(QUANTILE_975, abs=1e-12)
    assert std_normal_quantile(0.123) == pytest.approx(QUANTILE_123, abs=1e-12)


def test_quantile_odd_symmetry():
    for p in (0.01, 0.123, 0.3, 0.499):
        assert abs(std_normal_quantile(1.0 - p) + std_normal_quantile(p)) <= 1e-12


def test_quantile_domain_errors():
    for p in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            std_normal_quantile(p)


def test_quantile_roundtrip_single():
    assert abs(std_normal_cdf(std_normal_quantile(0.123)) - 0.123) <= 1e-12


def test_quantile_roundtrip_log_grid():
    """|Phi(Phi^-1(p)) - p| <= 1e-12 across both tails."""
    ps = np.geomspace(1e-10, 0.5, 60)
    ps = np.concatenate([ps, 1.0 - ps])
    worst = max(abs(std_normal_cdf(std_normal_quantile(float(p))) - float(p)) for p in ps)
    assert worst <= 1e-12


def test_integrate_constant():
    assert integrate(lambda w: 1.0, 0.0, 0.7) == pytest.approx(0.7, abs=1e-14)


def test_integrate_cubic():
    assert integrate(lambda w: w ** 3, 0.0, 1.0) == pytest.approx(0.25, abs=1e-12)


def test_integrate_normal_cdf():
    # closed form by integration by parts; frozen from the mpmath oracle
    val = integrate(std_normal_cdf, 0.0, 1.0)
    assert val == pytest.approx(INT_PHI_0_1, abs=1e-9)


def test_integrate_empty_and_reversed():
    assert integrate(lambda w: 5.0, 0.3, 0.3) == 0.0
    with pytest.raises(ValueError):
        integrate(lambda w: 1.0, 1.0, 0.0)


def test_integrate_linearity():
    rng = np.random.default_rng(11)
    cfg = QuadratureConfig()
    for _ in range(10):
        a, b = sorted(rng.uniform(-1.0, 2.0, size=2))
        alpha, beta = rng.uniform(-3.0, 3.0, size=2)
        c1, c2 = rng.uniform(0.5, 4.0, size=2)
        f = lambda x: math.sin(c1 * x)
        g = lambda x: math.exp(-c2 * x * x)
        combo = integrate(lambda x: alpha * f(x) + beta * g(x), a, b, cfg)
        parts = alpha * integrate(f, a, b, cfg) + beta * integrate(g, a, b, cfg)
        assert abs(combo - parts) <= 2.0 * cfg.abs_tol


def test_integrate_nonconvergence_reported():
    cfg = QuadratureConfig(abs_tol=1e-16, max_subdivisions=2)
    # oscillatory integrand cannot converge with two panels at this tolerance
    with pytest.raises(QuadratureError) as exc:
        integrate(lambda x: math.sin(50.0 * x), 0.0, 3.0, cfg)
    assert "did not converge" in str(exc.value)
    assert exc.value.estimate == exc.value.estimate  # not NaN


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivisions=0)
