import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats
from scipy.special import gammaln, logsumexp

from nigmix.count_priors import (
    CountPrior,
    SeriesError,
    TruncationWarning,
    bnb_log_pmf,
    prop31_bounds,
    series_log_terms,
)
from nigmix.variates import make_rng
from nigmix.weights import WeightModel


def psi_series_direct(lam, k, psi, terms=400):
    """sum_m (m+k)!/m! psi^m Poisson(m+k-1; lam) by brute force."""
    m = np.arange(terms)
    j = m + k - 1
    lt = gammaln(m + k + 1) - gammaln(m + 1) + m * math.log(psi) - lam + j * math.log(lam) - gammaln(j + 1)
    return float(logsumexp(lt))


def test_poisson_psi_at_one():
    p = CountPrior("poisson", lam=2.0)
    assert math.exp(p.log_Psi(1, 0.0)) == pytest.approx(3.0, rel=1e-14)
    assert math.exp(psi_series_direct(2.0, 1, 1.0)) == pytest.approx(3.0, rel=1e-12)


def test_poisson_closed_form_example():
    p = CountPrior("poisson", lam=1.3)
    lp = math.log(0.42)
    assert p.log_Psi(3, lp) == pytest.approx(psi_series_direct(1.3, 3, 0.42), rel=1e-12)
    assert p.log_Psi(3, lp) == pytest.approx(p.log_Psi_series(3, lp), rel=1e-12)


def test_psi_limit_small_psi():
    p = CountPrior("poisson", lam=1.7)
    k = 4
    ref = (k - 1) * math.log(1.7) + math.log(k) - 1.7
    assert p.log_Psi(k, -800.0) == pytest.approx(ref, rel=1e-14)
    assert p.log_Psi(k, -np.inf) == pytest.approx(ref, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 30), st.floats(1e-4, 0.999), st.integers(1, 40))
def test_closed_form_equals_series(lam, psi, k):
    p = CountPrior("poisson", lam=lam)
    a = p.log_Psi(k, math.log(psi))
    b = p.log_Psi_series(k, math.log(psi))
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_geometric_series_closed_form():
    p = CountPrior("geometric", geo_p=0.1)
    for k, psi in [(1, 0.3), (3, 0.9), (10, 0.05)]:
        q = 0.9
        ref = math.log(0.1) + (k - 1) * math.log(q) + gammaln(k + 1) - (k + 1) * math.log(1 - psi * q)
        assert p.log_Psi(k, math.log(psi)) == pytest.approx(ref, rel=1e-12)


def test_series_error_surfaces():
    with pytest.raises(SeriesError):
        series_log_terms(lambda m: np.zeros(m.shape), max_terms=2000)


def test_series_stops_on_zero_terms():
    lt = series_log_terms(lambda m: np.where(m < 3, 0.0, -np.inf))
    assert np.isclose(logsumexp(lt), math.log(3))


def test_m_na_pmf_example():
    p = CountPrior("poisson", lam=1.0)
    pmf = np.exp(p.M_na_log_pmf(1, 0.0))
    assert pmf[0] == pytest.approx(0.5 * math.exp(-1), rel=1e-12)
    assert pmf.sum() == pytest.approx(1.0, rel=1e-13)


def test_m_na_zero_when_psi_vanishes(rng):
    p = CountPrior("poisson", lam=3.0)
    assert all(p.sample_M_na(rng, 2, -np.inf) == 0 for _ in range(100))


@pytest.mark.parametrize("family,kw", [("poisson", {"lam": 2.5}), ("geometric", {"geo_p": 0.1}), ("bnb", {"lam": 1.4})])
def test_m_na_sampler_matches_enumeration(family, kw):
    rng = make_rng(12)
    p = CountPrior(family, **kw)
    k, lp = 3, math.log(0.6)
    pmf = np.exp(p.M_na_log_pmf(k, lp))
    n = 1_000_000
    draws = np.array([p.sample_M_na(rng, k, lp) for _ in range(n)])
    emp = np.bincount(draws, minlength=pmf.size)[: pmf.size] / n
    tv = 0.5 * (np.abs(emp - pmf).sum() + np.mean(draws >= pmf.size))
    assert tv < 0.005


def test_lambda_collapses_when_psi_zero(rng):
    # Psi -> Lambda^(k-1) k exp(-Lambda), so the conditional is Gamma(k + a - 1, 1 + b)
    p = CountPrior("poisson", a_lambda=2.0, b_lambda=0.5)
    draws = np.array([p.sample_lambda(rng, 3, -np.inf) for _ in range(100_000)])
    assert abs(draws.mean() - 4 / 1.5) < 4 * math.sqrt(4) / 1.5 / math.sqrt(draws.size)


def test_lambda_conditional_against_quadrature():
    # unnormalised density Psi(u, k; Lambda) Gamma(Lambda; a, b), Psi from the series
    a, b, k, psi = 1.0, 1.0, 2, 0.5
    lp = math.log(psi)

    def log_dens(lam):
        return CountPrior("poisson", lam=lam).log_Psi_series(k, lp) + stats.gamma.logpdf(lam, a, scale=1 / b)

    p = CountPrior("poisson", a_lambda=a, b_lambda=b)
    rng = make_rng(21)
    draws = np.array([p.sample_lambda(rng, k, lp) for _ in range(50_000)])
    edges = np.quantile(draws, np.linspace(0, 1, 31))
    edges[0], edges[-1] = 0.0, 60.0
    mass = np.array([integrate.quad(lambda x: math.exp(log_dens(x)), lo, hi, epsabs=0, epsrel=1e-10)[0]
                     for lo, hi in zip(edges[:-1], edges[1:])])
    observed = np.histogram(draws, edges)[0]
    assert stats.chisquare(observed, mass / mass.sum() * draws.size).pvalue > 0.001


def test_lambda_posterior_mean_increases_with_k():
    p = CountPrior("poisson", a_lambda=1.0, b_lambda=0.2)
    rng = make_rng(22)
    means = [np.mean([p.sample_lambda(rng, k, math.log(0.3)) for _ in range(20_000)]) for k in range(1, 11)]
    assert np.all(np.diff(means) > 0)


def test_fixed_lambda_untouched(rng):
    p = CountPrior("poisson", lam=1.0)
    assert not p.learns_lambda
    assert p.sample_lambda(rng, 5, -1.0) == 1.0
    assert p.sample_lambda_given_M(rng, 7) == 1.0


def test_m_dynamic_point_mass(rng):
    class PointMass(CountPrior):
        def log_qM(self, m):
            m = np.asarray(m)
            return np.where(m == 6, 0.0, -np.inf)

    p = PointMass("poisson", lam=1.0)
    sizes = np.ones(6, dtype=int)
    for _ in range(20):
        assert p.sample_M_dynamic(rng, 6, sizes, WeightModel("igau", 1.0, dynamic=True), 2.0, 40) == 6


def test_m_dynamic_weights_brute_force():
    p = CountPrior("poisson", lam=2.0)
    wm = WeightModel("igau", 1.5, dynamic=True)
    u = 0.8
    m, lw = p.log_M_weights(1, [1], lambda mm: wm.log_psi(u, mm), lambda mm: wm.sum_log_kappa(u, [1], mm), 50)
    for mm, val in zip(m, lw):
        ref = math.log(mm) + (mm - 1) * wm.log_psi(u, int(mm)) + wm.log_kappa(u, 1, int(mm)) + p.log_qM(int(mm))
        assert val == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("family", ["poisson", "geometric"])
def test_m_dynamic_static_model_is_shifted_m_na(family):
    p = CountPrior(family, lam=2.0)
    wm = WeightModel("igau", 0.8)
    u, sizes = 1.3, np.array([4, 2, 1])
    k = sizes.size
    lp = wm.log_psi(u)
    na = np.exp(p.M_na_log_pmf(k, lp))
    m, lw = p.log_M_weights(k, sizes, lambda mm: wm.log_psi(u, mm), lambda mm: wm.sum_log_kappa(u, sizes, mm), k + na.size - 1)
    dyn = np.exp(lw - logsumexp(lw))
    assert np.allclose(dyn, na, rtol=1e-9, atol=1e-15)
    rng = make_rng(31)
    # the pmfs agree exactly above; a short run checks the draw itself
    draws = np.array([p.sample_M_dynamic(rng, k, sizes, wm, u, 100) for _ in range(30_000)]) - k
    emp = np.bincount(draws, minlength=na.size)[: na.size] / draws.size
    assert 0.5 * np.abs(emp - na).sum() < 0.02


def test_m_dynamic_truncation_warning(rng):
    p = CountPrior("poisson", lam=50.0)
    with pytest.warns(TruncationWarning):
        p.sample_M_dynamic(rng, 2, np.array([1, 1]), WeightModel("igau", 1.0, dynamic=True), 0.01, 5)
    with pytest.raises(ValueError):
        p.sample_M_dynamic(rng, 6, np.ones(6, dtype=int), WeightModel("igau", 1.0), 0.1, 5)


def test_lambda_given_m_conjugate(rng):
    p = CountPrior("poisson", a_lambda=2.0, b_lambda=1.0)
    draws = np.array([p.sample_lambda_given_M(rng, 4) for _ in range(100_000)])
    assert abs(draws.mean() - 5 / 2) < 4 * math.sqrt(5) / 2 / math.sqrt(draws.size)


def test_bnb_zero_step_keeps_value(rng):
    p = CountPrior("bnb", lam=1.0)
    b0 = p.b_lambda
    for _ in range(10):
        assert p.mh_update_b_lambda(rng, step=0.0) == b0
    assert p.mh_accepted == p.mh_proposed == 10


def test_bnb_b_lambda_prior_recovery():
    # no data: Lambda | b ~ Gamma(a, b) exactly, b | Lambda by MH; b should be Betaprime(a_p, b_p)
    rng = make_rng(41)
    p = CountPrior("bnb", a_lambda=1.0, a_p=4.0, b_p=3.0)
    keep = []
    for t in range(300_000):
        p.lam = float(rng.gamma(p.a_lambda) / p.b_lambda)
        p.mh_update_b_lambda(rng)
        if t >= 1000 and t % 30 == 0:
            keep.append(p.b_lambda)
    assert 0 < p.mh_accepted / p.mh_proposed < 1
    assert stats.kstest(keep, stats.betaprime(4.0, 3.0).cdf).pvalue > 0.001


def test_bnb_pmf_matches_hierarchy():
    a, ap, bp = 1.0, 4.0, 3.0
    pmf = np.exp(bnb_log_pmf(np.arange(400), a, ap, bp))
    assert pmf.sum() == pytest.approx(1.0, abs=1e-3)  # heavy tail
    for j in (0, 2, 7):
        # integrate NB(j; a, b/(1+b)) against Betaprime(b; ap, bp)
        f = lambda b: stats.nbinom.pmf(j, a, b / (1 + b)) * stats.betaprime.pdf(b, ap, bp)  # noqa: E731
        ref = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-11)[0]
        assert pmf[j] == pytest.approx(ref, rel=1e-8)


def test_poisson_gamma_marginal_is_negative_binomial():
    p = CountPrior("poisson", a_lambda=1.0, b_lambda=0.2)
    m = np.arange(1, 30)
    assert np.allclose(np.exp(p.log_marginal_qM(m)), stats.nbinom.pmf(m - 1, 1.0, 0.2 / 1.2), rtol=1e-12)


def test_prior_validation():
    with pytest.raises(ValueError):
        CountPrior("uniform")
    with pytest.raises(ValueError):
        CountPrior("geometric", geo_p=1.0)
    with pytest.raises(ValueError):
        CountPrior("poisson", a_lambda=1.0)
    with pytest.raises(ValueError):
        CountPrior("poisson", lam=0.0)


def test_prop31_examples():
    c, m = prop31_bounds(-np.inf, 3, 2.0, 1.0, 1.0)
    assert c == 0 and m == 0
    c, m = prop31_bounds(math.log(0.5), 1, 1.0)
    assert c == pytest.approx(5 / 6, rel=1e-15)
    assert math.isnan(m)
    assert prop31_bounds(math.log(0.5), 2, 1.0, 2.0, 4.0)[1] == pytest.approx(0.5 * 0.5 * 1.5, rel=1e-15)


def test_prop31_conditional_never_violated():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        lam = float(rng.uniform(0.01, 20))
        k = int(rng.integers(1, 30))
        lp = WeightModel("igau", float(rng.uniform(0.05, 5))).log_psi(float(rng.exponential(3)))
        p = CountPrior("poisson", lam=lam)
        prob = -math.expm1(p.M_na_log_pmf(k, lp)[0])
        assert prob <= prop31_bounds(lp, k, lam)[0]


def test_state_reports_hypers():
    assert CountPrior("bnb").state().keys() == {"Lambda", "b_Lambda"}
    assert CountPrior("geometric").state() == {}


def test_no_warnings_on_regular_draws(rng):
    p = CountPrior("poisson", lam=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p.sample_M_dynamic(rng, 2, np.array([3, 1]), WeightModel("igau", 1.0, dynamic=True), 1.0, 100)
