"""Priors ``q_M`` on the number of mixture components.

Three families are provided, all with support ``M = 1, 2, ...``:

``poisson``
    ``M - 1 | Lambda ~ Poisson(Lambda)``.  ``Lambda`` is either fixed or
    given a ``Gamma(a_lambda, b_lambda)`` hyperprior.
``geometric``
    ``P(M - 1 = j) = p (1 - p)^j``.
``bnb``
    Beta-negative-binomial, built hierarchically as the Poisson family with
    ``Lambda ~ Gamma(a_lambda, b_lambda)`` and ``b_lambda ~ Betaprime(a_p, b_p)``.

The central quantity is the series

    Psi(u, k) = sum_{m >= 0} (m + k)! / m! * psi^m * q_M(m + k),

whose terms, normalised, give the law of the number of empty components.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from . import variates

__all__ = [
    "CountPrior",
    "SeriesError",
    "TruncationWarning",
    "prop31_bounds",
    "bnb_log_pmf",
    "series_log_terms",
]

SERIES_RTOL = 1e-14
SERIES_MAX_TERMS = 1_000_000
_BLOCK = 512


class SeriesError(RuntimeError):
    """Raised when a count series does not reach its truncation rule."""


class TruncationWarning(RuntimeWarning):
    """Too much posterior mass at the upper bound of the component count."""


def bnb_log_pmf(j, a_lambda, a_p, b_p):
    """Log pmf of ``BNB(a_lambda, a_p, b_p)`` at ``j = M - 1 >= 0``."""
    j = np.asarray(j, dtype=float)
    return (
        sc.gammaln(j + a_lambda)
        - sc.gammaln(j + 1.0)
        - sc.gammaln(a_lambda)
        + sc.betaln(a_p + a_lambda, b_p + j)
        - sc.betaln(a_p, b_p)
    )


def series_log_terms(log_term, rtol=SERIES_RTOL, max_terms=SERIES_MAX_TERMS):
    """Evaluate the log terms of a positive series until its tail is negligible.

    ``log_term(m)`` maps an integer array of indices to log terms.  Terms
    are generated in blocks; summation stops at the first index where the
    term ratio is below one and the geometric bound on the remaining tail,
    ``t_m r_m / (1 - r_m)``, is below ``rtol`` times the partial sum.

    Returns
    -------
    ndarray
        Log terms for indices ``0..stop`` inclusive.
    """
    log_rtol = math.log(rtol)
    chunks = []
    acc = -np.inf
    start = 0
    while start < max_terms:
        m = np.arange(start, min(start + _BLOCK, max_terms) + 1)
        lt = log_term(m)
        partial = np.logaddexp(acc, np.logaddexp.accumulate(lt[:-1]))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = lt[1:] - lt[:-1]
            log_tail = lt[:-1] + log_ratio - np.log(-np.expm1(log_ratio))
            done = (log_ratio < 0) & (log_tail < log_rtol + partial)
        # a zero term with zero successor is also a converged tail
        done |= np.isneginf(lt[:-1]) & np.isneginf(lt[1:]) & np.isfinite(partial)
        hit = np.flatnonzero(done)
        if hit.size:
            chunks.append(lt[: hit[0] + 1])
            return np.concatenate(chunks)
        chunks.append(lt[:-1])
        acc = partial[-1]
        start = m[-1]
    raise SeriesError(f"count series did not converge within {max_terms} terms")


@dataclass
class CountPrior:
    """Prior on the number of components with its mutable hyper state.

    Parameters
    ----------
    family : {"poisson", "geometric", "bnb"}
    lam : float
        Current ``Lambda`` (Poisson and BNB).
    a_lambda, b_lambda : float or None
        Gamma hyperprior on ``Lambda``.  For the Poisson family, leaving
        ``a_lambda`` unset keeps ``Lambda`` fixed.
    a_p, b_p : float
        Beta-prime hyperprior on ``b_lambda`` (BNB only).
    geo_p : float
        Success probability of the geometric family.
    mh_step : float
        Log-scale random-walk step for the ``b_lambda`` update (BNB).
    """

    family: str = "poisson"
    lam: float = 1.0
    a_lambda: float = None
    b_lambda: float = None
    a_p: float = 4.0
    b_p: float = 3.0
    geo_p: float = 0.1
    mh_step: float = 0.5
    mh_accepted: int = 0
    mh_proposed: int = 0

    def __post_init__(self):
        if self.family not in ("poisson", "geometric", "bnb"):
            raise ValueError(f"unknown component-count family {self.family!r}")
        if self.family == "geometric":
            if not 0.0 < self.geo_p < 1.0:
                raise ValueError("geometric p must be in (0, 1)")
            return
        if self.family == "bnb":
            if self.a_lambda is None:
                self.a_lambda = 1.0
            if self.b_lambda is None:
                # start at the prior mean of b when it exists, else the median-ish 1
                self.b_lambda = self.a_p / (self.b_p - 1.0) if self.b_p > 1 else 1.0
            for name in ("a_p", "b_p"):
                if not getattr(self, name) > 0:
                    raise ValueError(f"{name} must be positive")
        if self.a_lambda is not None:
            if self.b_lambda is None:
                raise ValueError("a Gamma hyperprior on Lambda needs both a_lambda and b_lambda")
            if not (self.a_lambda > 0 and self.b_lambda > 0):
                raise ValueError("a_lambda and b_lambda must be positive")
        if not self.lam > 0:
            raise ValueError("Lambda must be positive")

    @property
    def has_lambda(self):
        return self.family in ("poisson", "bnb")

    @property
    def learns_lambda(self):
        return self.has_lambda and self.a_lambda is not None

    def initial_lambda(self):
        if self.learns_lambda:
            self.lam = self.a_lambda / self.b_lambda
        return self.lam

    # -- pmf and series ---------------------------------------------------

    def log_qM(self, m):
        """Log prior pmf of ``M`` at ``m >= 1`` given the current hyper state."""
        m = np.asarray(m, dtype=float)
        j = m - 1.0
        if self.family == "geometric":
            out = math.log(self.geo_p) + j * math.log1p(-self.geo_p)
        else:
            out = -self.lam + j * math.log(self.lam) - sc.gammaln(m)
        out = np.where(j >= 0, out, -np.inf)
        return float(out) if out.ndim == 0 else out

    def log_marginal_qM(self, m):
        """Log pmf of ``M`` with ``Lambda`` (and ``b_lambda``) integrated out."""
        m = np.asarray(m, dtype=float)
        j = m - 1.0
        if self.family == "geometric" or not self.learns_lambda:
            return self.log_qM(m)
        if self.family == "bnb":
            out = bnb_log_pmf(j, self.a_lambda, self.a_p, self.b_p)
        else:
            a, b = self.a_lambda, self.b_lambda
            out = (
                sc.gammaln(j + a)
                - sc.gammaln(j + 1.0)
                - sc.gammaln(a)
                + a * math.log(b / (1.0 + b))
                - j * math.log1p(b)
            )
        out = np.where(j >= 0, out, -np.inf)
        return float(out) if out.ndim == 0 else out

    def _na_log_terms(self, k, log_psi):
        def term(m):
            return (
                sc.gammaln(m + k + 1.0)
                - sc.gammaln(m + 1.0)
                + np.where(m > 0, m * log_psi, 0.0)
                + self.log_qM(m + k)
            )

        return series_log_terms(term)

    def log_Psi_series(self, k, log_psi):
        """``log Psi(u, k)`` by the truncated series (any family)."""
        return float(sc.logsumexp(self._na_log_terms(int(k), float(log_psi))))

    def log_Psi(self, k, log_psi):
        """``log Psi(u, k)``; closed form for Poisson-type families."""
        k = int(k)
        if k < 1:
            raise ValueError("k must be >= 1")
        if self.family == "geometric":
            return self.log_Psi_series(k, log_psi)
        lam = self.lam
        lp = lam * math.exp(log_psi)
        return (k - 1) * math.log(lam) + math.log(lp + k) + lam * (math.exp(log_psi) - 1.0)

    def M_na_log_pmf(self, k, log_psi):
        """Normalised log pmf of the empty-component count on ``0..stop``."""
        lt = self._na_log_terms(int(k), float(log_psi))
        return lt - sc.logsumexp(lt)

    # -- full conditionals ------------------------------------------------

    def sample_lambda(self, rng, k, log_psi):
        """Draw ``Lambda`` from its full conditional given ``u`` and ``k``.

        The conditional is proportional to the Gamma prior times
        ``Psi(u, k)``, a two-component gamma mixture with common rate
        ``r = 1 - psi + b_lambda``: shape ``k + a`` with weight
        ``psi (k + a - 1)`` and shape ``k + a - 1`` with weight ``k r``.
        """
        if not self.learns_lambda:
            return self.lam
        psi = math.exp(log_psi)
        a, b = self.a_lambda, self.b_lambda
        rate = 1.0 - psi + b
        w_hi = psi * (k + a - 1.0)
        w_lo = k * rate
        shape = k + a if rng.random() * (w_hi + w_lo) < w_hi else k + a - 1.0
        self.lam = float(variates.gamma(rng, shape, rate))
        return self.lam

    def sample_M_na(self, rng, k, log_psi):
        """Draw the number of empty components given ``u`` and ``k``."""
        if self.family == "geometric":
            # terms (m+k)!/m! (psi (1-p))^m: negative binomial with k + 1 successes
            q = math.exp(log_psi) * (1.0 - self.geo_p)
            if q <= 0.0:
                return 0
            return int(rng.negative_binomial(k + 1, 1.0 - q))
        lp = self.lam * math.exp(log_psi)
        if lp <= 0.0:
            return 0
        shift = 1 if rng.random() * (lp + k) < lp else 0
        return shift + int(rng.poisson(lp))

    def log_M_weights(self, k, sizes, log_psi_fn, sum_log_kappa_fn, m_max):
        """Unnormalised log weights of ``M = k..m_max`` given the partition."""
        m = np.arange(k, m_max + 1)
        lp = log_psi_fn(m)
        out = (
            sc.gammaln(m + 1.0)
            - sc.gammaln(m - k + 1.0)
            + np.where(m > k, (m - k) * lp, 0.0)
            + sum_log_kappa_fn(m)
            + self.log_qM(m)
        )
        return m, out

    def sample_M_dynamic(self, rng, k, sizes, weight_model, u, m_max):
        """Draw ``M`` over ``{k, ..., m_max}`` given the partition sizes.

        Works for static and dynamic weight models.  Warns with
        :class:`TruncationWarning` when more than 1% of the mass sits on
        ``m_max``.
        """
        if m_max < k:
            raise ValueError("m_max must be at least the number of clusters")
        m, lw = self.log_M_weights(
            k,
            sizes,
            lambda mm: weight_model.log_psi(u, mm),
            lambda mm: weight_model.sum_log_kappa(u, sizes, mm),
            m_max,
        )
        lw = lw - sc.logsumexp(lw)
        if m.size > 1 and lw[-1] > math.log(0.01):
            warnings.warn(
                f"{math.exp(lw[-1]):.3f} of the mass of M is at the bound {m_max}",
                TruncationWarning,
                stacklevel=2,
            )
        return int(m[variates.categorical_log(rng, lw[None, :])[0]])

    def sample_lambda_given_M(self, rng, M):
        """``Lambda | M ~ Gamma(a + M - 1, b + 1)`` (partition-level sampler)."""
        if not self.learns_lambda:
            return self.lam
        self.lam = float(variates.gamma(rng, self.a_lambda + M - 1.0, self.b_lambda + 1.0))
        return self.lam

    def _log_b_target(self, b):
        return (self.a_lambda + self.a_p - 1.0) * math.log(b) - b * self.lam - (
            self.a_p + self.b_p
        ) * math.log1p(b)

    def mh_update_b_lambda(self, rng, step=None):
        """One Metropolis-Hastings step on ``b_lambda`` (BNB only).

        Target ``p(b | Lambda)`` is proportional to
        ``b^a exp(-b Lambda) * Betaprime(b; a_p, b_p)``; the proposal is a
        log-normal random walk, whose Jacobian enters the ratio.
        """
        if self.family != "bnb":
            return self.b_lambda
        step = self.mh_step if step is None else step
        b = self.b_lambda
        prop = b * math.exp(step * rng.standard_normal())
        log_ratio = self._log_b_target(prop) - self._log_b_target(b) + math.log(prop) - math.log(b)
        self.mh_proposed += 1
        if math.log(rng.random()) < log_ratio:
            self.b_lambda = prop
            self.mh_accepted += 1
        return self.b_lambda

    def state(self):
        out = {}
        if self.has_lambda:
            out["Lambda"] = self.lam
        if self.family == "bnb":
            out["b_Lambda"] = self.b_lambda
        return out


def prop31_bounds(log_psi, k, lam, a_lambda=None, b_lambda=None):
    """Upper bounds on ``P(M_na >= 1)`` for the Poisson-Gamma family.

    Returns ``(Lambda psi (1 + 1 / (Lambda psi + k)), psi a/b (1 + 1/k))``;
    the second entry is ``nan`` without a Gamma hyperprior.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    psi = math.exp(log_psi)
    lp = lam * psi
    conditional = lp * (1.0 + 1.0 / (lp + k))
    if a_lambda is None or b_lambda is None:
        marginal = float("nan")
    else:
        marginal = psi * (a_lambda / b_lambda) * (1.0 + 1.0 / k)
    return conditional, marginal
