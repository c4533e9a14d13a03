import math

import numpy as np
import pytest

from steinfisher.distributions import catalog_get
from steinfisher.errors import DensityUnderflow, NotCentered
from steinfisher.quadrature import integrate
from steinfisher.stein_core import (covariance_formula_check,
                                    decomposition_check, l_operator)
from steinfisher.streams import substream

SQRT3 = math.sqrt(3.0)


def smooth_bump(flat: float, zero: float):
    """C2 plateau function: 1 on [-flat, flat], 0 outside [-zero, zero]."""
    width = zero - flat

    def bump(x):
        x = np.abs(np.asarray(x, dtype=float))
        t = np.clip((x - flat) / width, 0.0, 1.0)
        return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)

    def bump_prime(x):
        x = np.asarray(x, dtype=float)
        t = np.clip((np.abs(x) - flat) / width, 0.0, 1.0)
        mag = -30.0 * t ** 2 * (1.0 - t) ** 2 / width
        return np.sign(x) * mag

    return bump, bump_prime


def clipped_poly(coeffs, flat=10.0, zero=14.0):
    bump, bump_prime = smooth_bump(flat, zero)
    poly = np.polynomial.Polynomial(coeffs)
    dpoly = poly.deriv()

    def alpha(x):
        return poly(np.asarray(x, dtype=float)) * bump(x)

    def alpha_prime(x):
        x = np.asarray(x, dtype=float)
        return dpoly(x) * bump(x) + poly(x) * bump_prime(x)

    return alpha, alpha_prime


def test_covariance_identity_cov_xx_gaussian():
    g = catalog_get("gaussian")
    alpha, alpha_prime = clipped_poly([0.0, 1.0])
    rep = covariance_formula_check(g, alpha, alpha_prime, lambda x: x)
    assert rep.lhs == pytest.approx(1.0, abs=1e-9)
    assert rep.abs_diff <= 1e-8


def test_covariance_identity_sin_xsq_gaussian():
    g = catalog_get("gaussian")
    rep = covariance_formula_check(g, np.sin, np.cos, lambda x: x * x)
    assert rep.abs_diff <= 1e-8


def test_covariance_identity_uniform_fourth_moment():
    u = catalog_get("uniform")
    alpha, alpha_prime = clipped_poly([0.0, 0.0, 0.0, 1.0])
    rep = covariance_formula_check(u, alpha, alpha_prime, lambda x: x)
    # Cov(X^3, X) = E[X^4] = 9/5 for the unit-variance uniform law
    assert rep.lhs == pytest.approx(9.0 / 5.0, abs=1e-9)
    assert rep.abs_diff <= 1e-8


@pytest.mark.parametrize("name", ["gaussian", "uniform",
                                  "exponential_centered", "student_t(20)"])
def test_covariance_identity_randomized(name):
    dist = catalog_get(name)
    rng = np.random.default_rng(101)
    for _ in range(5):
        alpha, alpha_prime = clipped_poly(rng.uniform(-1, 1, size=4))
        beta_coeffs = rng.uniform(-1, 1, size=5)
        beta = np.polynomial.Polynomial(beta_coeffs)
        rep = covariance_formula_check(dist, alpha, alpha_prime, beta)
        assert rep.abs_diff <= 1e-7


def test_boundary_decay_of_tail_integral(catalog_dist):
    d = catalog_dist
    wlo, whi = d.quad_window
    span = whi - wlo
    e_beta = integrate(lambda y: y * d.density(y), wlo, whi, tol=1e-12)
    tails = [
        abs(integrate(lambda y: (y - e_beta) * d.density(y),
                      whi - frac * span, whi, tol=1e-12))
        for frac in (1e-2, 1e-4, 1e-6)
    ]
    assert tails[0] > tails[1] > tails[2]
    assert tails[2] <= 1e-5


def test_l_operator_examples():
    g = catalog_get("gaussian")
    u = catalog_get("uniform")
    e = catalog_get("exponential_centered")
    ident = lambda y: np.asarray(y, dtype=float)
    assert l_operator(g, ident, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert l_operator(u, ident, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert l_operator(e, ident, 2.0) == pytest.approx(3.0, abs=1e-9)


def test_l_operator_equals_tau_on_grid(catalog_dist):
    d = catalog_dist
    ident = lambda y: np.asarray(y, dtype=float)
    draws = d.sampler(substream(17, "lgrid", d.name), 50_000)
    grid = np.quantile(draws, np.linspace(0.05, 0.95, 9))
    for x in grid:
        assert l_operator(d, ident, float(x), tol=1e-12) == pytest.approx(
            float(d.tau(x)), abs=1e-8)


def test_l_operator_guards():
    g = catalog_get("gaussian")
    with pytest.raises(NotCentered):
        l_operator(g, lambda y: np.asarray(y, float) + 1.0, 0.0)
    with pytest.raises(DensityUnderflow):
        l_operator(g, lambda y: np.asarray(y, float), 60.0)


def test_decomposition_check_quadform_product():
    g = catalog_get("gaussian")
    statistic = lambda x: x[0] * x[1]
    parts = [lambda x: 0.5 * x[0] * x[1], lambda x: 0.5 * x[1] * x[0]]
    rep = decomposition_check(statistic, parts, [g, g], n_mc=400, seed=3)
    assert rep.sum_defect_max <= 1e-12
    assert rep.cond_mean_abs_max <= 1e-9


def test_decomposition_check_linear_statistic():
    u = catalog_get("uniform")
    n = 4
    statistic = lambda x: x.sum() / math.sqrt(n)
    parts = [
        (lambda k: (lambda x: x[k] / math.sqrt(n)))(k) for k in range(n)
    ]
    rep = decomposition_check(statistic, parts, [u] * n, n_mc=300, seed=4)
    assert rep.sum_defect_max <= 1e-12
    assert rep.cond_mean_abs_max <= 1e-9


def test_decomposition_check_negative_control():
    g = catalog_get("gaussian")
    n = 3
    statistic = lambda x: x.sum()
    parts = [lambda x: x[0], lambda x: x[1], lambda x: 0.0]  # missing M_3
    rep = decomposition_check(statistic, parts, [g] * n, n_mc=300, seed=5)
    assert rep.sum_defect_max > 0.1
