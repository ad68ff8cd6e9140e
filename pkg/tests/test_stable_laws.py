import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from ladderepoch.stable_laws import (StableParams, limit_params, positivity_rho, sample_stable,
                                     stable_density, stable_tail, tail_constant)


def test_rho_values():
    assert positivity_rho(2, 0) == 0.5
    assert positivity_rho(1.5, 0) == 0.5
    assert positivity_rho(1.5, 1) == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("bad", [(1.0, 0), (2.1, 0), (1.5, 1.2), (0.5, 0)])
def test_rho_rejects(bad):
    with pytest.raises(ValueError):
        positivity_rho(*bad)


def test_alpha_two_forces_beta_zero():
    p = StableParams(2.0, 0.7)
    assert p.beta == 0.0 and p.rho == 0.5


def test_gaussian_closed_forms():
    p = StableParams(2.0)
    assert stable_density(p, 0.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-14)
    assert stable_tail(p, 0.0) == 0.5
    assert stable_tail(p, 2.0) == pytest.approx(special.ndtr(-2 / math.sqrt(2)), rel=1e-14)
    assert stable_tail(p, 2.0) == pytest.approx(0.07865, abs=1e-5)


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
def test_density_normalised(beta):
    p = StableParams(1.5, beta)
    # Gauss-Kronrod on a wide window plus the analytic tails
    K = tail_constant(p)
    Km = tail_constant(StableParams(1.5, -beta))
    L = 2000.0
    pts = [-L, -50, -10, -3, 0, 3, 10, 50, 200, L]
    body = sum(integrate.quad(lambda x: stable_density(p, x), lo, hi, limit=200, epsabs=1e-13)[0]
               for lo, hi in zip(pts, pts[1:]))
    tails = (K + Km) * L**-1.5
    assert body + tails == pytest.approx(1.0, abs=1e-6)


def test_rho_matches_density_quadrature():
    p = StableParams(1.5, 1.0)
    neg = integrate.quad(lambda x: stable_density(p, x), -30, 0, limit=200)[0]
    assert 1 - neg == pytest.approx(1 / 3, abs=1e-6)
    assert stable_tail(p, 0.0) == pytest.approx(1 / 3, abs=1e-12)


def test_density_tail_index():
    p = StableParams(1.5, 1.0)
    x = np.array([1e3, 1e4, 1e5])
    scaled = stable_density(p, x) * x**2.5
    assert np.all(scaled > 0)
    assert scaled[-1] == pytest.approx(1.5 * tail_constant(p), rel=1e-3)


@pytest.mark.parametrize("alpha,beta", [(1.5, 0.0), (1.5, 1.0), (1.8, 0.5), (1.2, -0.3)])
def test_against_scipy(alpha, beta):
    # scipy's S1 parametrization coincides with ours at unit scale
    p = StableParams(alpha, beta)
    x = np.array([-3.0, -0.7, 0.0, 0.4, 2.5, 8.0])
    ref = stats.levy_stable(alpha, beta)
    ref.dist.parameterization = "S1"
    assert np.allclose(stable_density(p, x), ref.pdf(x), rtol=2e-6, atol=1e-9)
    assert np.allclose(stable_tail(p, x), ref.sf(x), rtol=2e-6, atol=1e-9)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_scaling_contract(t):
    p = StableParams(1.5, 0.4)
    x = np.array([-1.0, 0.2, 1.0, 3.0, 10.0])
    assert np.allclose(stable_tail(p, x, time=t), stable_tail(p, x * t ** (-1 / 1.5)), atol=1e-6)


@given(st.floats(-20, 20), st.floats(0.0, 5.0))
@settings(max_examples=40, deadline=None)
def test_tail_monotone(x, dx):
    p = StableParams(1.6, 0.8)
    assert stable_tail(p, x + dx) <= stable_tail(p, x) + 1e-15


@given(st.floats(-50, 50))
@settings(max_examples=40, deadline=None)
def test_density_nonnegative(x):
    assert stable_density(StableParams(1.3, 1.0), x) >= 0


def test_limit_params_gaussian():
    z = limit_params(2.0)
    assert stable_tail(z, 1.0) == pytest.approx(special.ndtr(-1.0), rel=1e-13)


def test_sampler_gaussian_mean():
    rng = np.random.default_rng(5)
    y = sample_stable(StableParams(2.0), rng, 10**6)
    assert abs(y.mean()) < 3 * math.sqrt(2 / 10**6)
    assert y.var() == pytest.approx(2.0, rel=0.01)


@pytest.mark.parametrize("beta,rho", [(0.0, 0.5), (1.0, 1 / 3)])
def test_sampler_positivity(beta, rho):
    rng = np.random.default_rng(7)
    n = 400_000
    y = sample_stable(StableParams(1.5, beta), rng, n)
    frac = np.mean(y >= 0)
    assert abs(frac - rho) < 3 * math.sqrt(rho * (1 - rho) / n)


def test_sampler_matches_tail():
    rng = np.random.default_rng(9)
    p = StableParams(1.5, 1.0)
    n = 400_000
    y = sample_stable(p, rng, n)
    q = stable_tail(p, 2.0)
    assert abs(np.mean(y > 2.0) - q) < 4 * math.sqrt(q * (1 - q) / n)
