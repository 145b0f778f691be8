import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import kve

from nigmix import variates
from nigmix.variates import make_rng, spawn_rngs


def gig_moment_quad(a, b, c, k):
    """E[X^k] of GIG(a, b, c) by quadrature of the unnormalised density."""
    mode = ((c - 1) + math.sqrt((c - 1) ** 2 + a * b)) / a
    logf = lambda x: (c - 1) * math.log(x) - 0.5 * (a * x + b / x)  # noqa: E731
    ref = logf(mode)

    def f(x, p):
        return x**p * math.exp(logf(x) - ref)

    z = integrate.quad(f, 0, mode, args=(0,), epsrel=1e-11)[0] + integrate.quad(f, mode, np.inf, args=(0,), epsrel=1e-11)[0]
    m = integrate.quad(f, 0, mode, args=(k,), epsrel=1e-11)[0] + integrate.quad(f, mode, np.inf, args=(k,), epsrel=1e-11)[0]
    return m / z


def test_gig_mean_formula_matches_quadrature():
    assert variates.gig_mean(3.0, 2.0, 1.5) == pytest.approx(gig_moment_quad(3.0, 2.0, 1.5, 1), rel=1e-9)


def test_gig_igau_mean_and_variance(rng):
    x = variates.gig_many(rng, np.ones(400_000), np.ones(400_000), np.full(400_000, -0.5))
    se_mean = math.sqrt(1.0 / x.size)
    assert abs(x.mean() - 1.0) < 4 * se_mean
    # Var[X] = 1 with fourth central moment 1 + 3 + ... ; generous 4 SE band from the sample
    se_var = np.std((x - x.mean()) ** 2) / math.sqrt(x.size)
    assert abs(x.var() - 1.0) < 4 * se_var


def test_gig_three_two_one_point_five(rng):
    x = variates.gig_many(rng, np.full(400_000, 3.0), np.full(400_000, 2.0), np.full(400_000, 1.5))
    ref = gig_moment_quad(3.0, 2.0, 1.5, 1)
    assert abs(x.mean() / ref - 1) < 0.01


@pytest.mark.parametrize(
    "a,b,c",
    [(0.3, 0.2, -3.0), (5.0, 0.01, 0.2), (1.0, 40.0, 2.5), (2e-3, 2e-3, 0.5), (7.0, 7.0, -0.5), (1.0, 1e-6, -0.5)],
)
def test_gig_moments_against_bessel_ratio(rng, a, b, c):
    # E[X^k] = (b/a)^(k/2) K_{c+k}(w) / K_c(w), w = sqrt(ab)
    x = variates.gig_many(rng, np.full(100_000, a), np.full(100_000, b), np.full(100_000, c))
    w = math.sqrt(a * b)
    for k in (1, 2):
        ref = (b / a) ** (k / 2) * kve(c + k, w) / kve(c, w)
        se = np.std(x**k) / math.sqrt(x.size)
        assert abs(np.mean(x**k) - ref) < 4 * se


def test_igau_histogram_goodness_of_fit(rng):
    # GIG(1, alpha^2, -1/2) is IGau(alpha, 1) with density
    # alpha / sqrt(2 pi) s^(-3/2) exp(-(alpha - s)^2 / (2 s))
    alpha = 1.7
    x = variates.gig_many(rng, np.ones(100_000), np.full(100_000, alpha**2), np.full(100_000, -0.5))
    edges = np.quantile(x, np.linspace(0, 1, 41))
    edges[0], edges[-1] = 0.0, np.inf
    dens = lambda s: alpha / math.sqrt(2 * math.pi) * s**-1.5 * math.exp(-((alpha - s) ** 2) / (2 * s))  # noqa: E731
    probs = np.array([integrate.quad(dens, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])])
    observed = np.histogram(x, edges)[0]
    chi2 = stats.chisquare(observed, probs / probs.sum() * x.size)
    assert chi2.pvalue > 0.001


def test_gig_rejects_bad_parameters(rng):
    with pytest.raises(ValueError):
        variates.gig(rng, 0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        variates.gig(rng, 1.0, -1.0, 0.5)


def test_gamma_mean(rng):
    x = variates.gamma(rng, 2.0, 4.0, size=200_000)
    assert abs(x.mean() - 0.5) < 4 * math.sqrt(2 / 16 / x.size)


def test_log_gamma_tiny_shape(rng):
    shape = 1e-3
    lx = variates.log_gamma(rng, np.full(200_000, shape), np.ones(200_000))
    assert np.all(np.isfinite(lx))
    # E[log G] = digamma(shape) for a unit-rate gamma
    from scipy.special import polygamma, psi

    se = math.sqrt(polygamma(1, shape) / lx.size)
    assert abs(lx.mean() - psi(shape)) < 4 * se


def test_poisson_zero_mass(rng):
    x = variates.poisson(rng, 1.0, size=200_000)
    p0 = np.mean(x == 0)
    assert abs(p0 - math.exp(-1)) < 4 * math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / x.size)


def test_wishart_mean(rng):
    draws = np.array([variates.wishart(rng, 5.0, np.eye(2)) for _ in range(100_000)])
    assert np.allclose(draws.mean(axis=0), 5 * np.eye(2), atol=0.05)


def test_inverse_wishart_mean(rng):
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    draws = np.array([variates.inverse_wishart(rng, 8.0, S) for _ in range(40_000)])
    assert np.allclose(draws.mean(axis=0), S / (8.0 - 3.0), atol=0.02)


def test_wishart_dimension_check(rng):
    with pytest.raises(ValueError):
        variates.wishart(rng, 0.5, np.eye(3))


def test_multivariate_normal_uses_lower_factor(rng):
    cov = np.array([[4.0, 1.0], [1.0, 2.0]])
    r1 = make_rng(5)
    x = variates.multivariate_normal(r1, np.zeros(2), cov)
    z = make_rng(5).standard_normal(2)
    assert np.array_equal(x, np.linalg.cholesky(cov) @ z)


def test_categorical_rejects_zero_weights(rng):
    with pytest.raises(ValueError):
        variates.categorical(rng, [0.0, 0.0])
    with pytest.raises(ValueError):
        variates.categorical(rng, [0.5, -0.1])


def test_categorical_frequencies(rng):
    w = np.array([0.2, 0.0, 0.5, 0.3])
    x = np.array([variates.categorical(rng, w) for _ in range(50_000)])
    freq = np.bincount(x, minlength=4) / x.size
    assert freq[1] == 0
    assert np.allclose(freq, w, atol=0.01)


def test_categorical_log_rows(rng):
    lw = np.log(np.array([[0.1, 0.9], [0.9, 0.1]]))
    draws = np.array([variates.categorical_log(rng, lw) for _ in range(20_000)])
    assert np.allclose(draws.mean(axis=0), [0.9, 0.1], atol=0.01)
    with pytest.raises(ValueError):
        variates.categorical_log(rng, np.full((1, 3), -np.inf))


def test_seeded_streams_reproducible():
    a = variates.gig_many(make_rng(11), np.ones(50), np.ones(50), np.zeros(50))
    b = variates.gig_many(make_rng(11), np.ones(50), np.ones(50), np.zeros(50))
    assert np.array_equal(a, b)


def test_spawned_streams_differ_and_repeat():
    s1 = [r.random(3) for r in spawn_rngs(3, 4)]
    s2 = [r.random(3) for r in spawn_rngs(3, 4)]
    assert all(np.array_equal(x, y) for x, y in zip(s1, s2))
    assert not np.array_equal(s1[0], s1[1])
