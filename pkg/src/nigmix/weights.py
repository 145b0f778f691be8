"""Weight priors for the unnormalised component weights.

Each component carries an unnormalised weight ``S_m`` drawn independently
from ``h``; the mixture weights are ``pi_m = S_m / T`` with ``T = sum S``.
Two families are supported, each in a static and a dynamic flavour:

* ``igau``: inverse Gaussian ``IGau(alpha, 1)``, so ``pi`` is normalised
  inverse Gaussian.
* ``gamma``: ``Gamma(gamma, 1)``, so ``pi`` is Dirichlet.

The dynamic flavour divides the shape by the current number of components
``m``.  Everything is evaluated on the log scale; ``psi`` is the Laplace
transform ``E[exp(-u S)]`` and ``kappa(u; n)`` is ``(-1)^n`` times its
``n``-th derivative, i.e. ``E[S^n exp(-u S)]``.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special as sc

from . import _core
from . import variates
from .special import log_bessel_k_half, log_bessel_k_int

__all__ = ["WeightModel", "log_nigau_density"]

_FAMILIES = ("igau", "gamma")
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class WeightModel:
    """Weight prior ``h`` with scale (IGau) or rate (Gamma) fixed at one.

    Parameters
    ----------
    family : {"igau", "gamma"}
    shape : float
        ``alpha`` for IGau, ``gamma`` for Gamma.
    dynamic : bool
        If true the effective shape is ``shape / m``.
    """

    family: str = "igau"
    shape: float = 1.0
    dynamic: bool = False

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError("weight shape must be positive and finite")

    @property
    def label(self):
        prefix = "DMFM" if self.dynamic else "MFM"
        return f"{prefix}-{'IGau' if self.family == 'igau' else 'Ga'}"

    def with_shape(self, shape):
        return replace(self, shape=float(shape))

    def effective_shape(self, m=1):
        if not self.dynamic:
            return self.shape
        m = np.asarray(m)
        if np.any(m < 1):
            raise ValueError("dynamic weight models need m >= 1")
        out = self.shape / m
        return float(out) if np.ndim(out) == 0 else out

    # -- evaluation -------------------------------------------------------

    def log_density_h(self, s, m=1):
        """Log density of ``h`` (shape divided by ``m`` when dynamic)."""
        s = np.asarray(s, dtype=float)
        if np.any(~(s > 0)):
            raise ValueError("s must be strictly positive")
        a = self.effective_shape(m)
        if self.family == "igau":
            out = np.log(a) - 0.5 * _LOG_2PI - 1.5 * np.log(s) + a - 0.5 * (s + a * a / s)
        else:
            out = (a - 1.0) * np.log(s) - s - sc.gammaln(a)
        return float(out) if out.ndim == 0 else out

    def log_psi(self, u, m=1):
        """Log Laplace transform ``log E[exp(-u S)]``."""
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be non-negative")
        a = self.effective_shape(m)
        if self.family == "igau":
            # 1 - sqrt(1 + 2u) written to avoid cancellation near u = 0
            out = -a * 2.0 * u / (1.0 + np.sqrt(1.0 + 2.0 * u))
        else:
            out = -a * np.log1p(u)
        return float(out) if out.ndim == 0 else out

    def log_kappa(self, u, n, m=1):
        """Log cumulant ``log E[S^n exp(-u S)]`` for integer ``n >= 1``.

        For IGau this is ``alpha^n psi(u) (1+2u)^(-n/2) K_{n-1/2}(z) / K_{1/2}(z)``
        with ``z = alpha sqrt(1+2u)``.
        """
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        u = float(u)
        if u < 0:
            raise ValueError("u must be non-negative")
        a = float(self.effective_shape(m))
        if self.family == "gamma":
            return sc.gammaln(a + n) - sc.gammaln(a) - (a + n) * math.log1p(u)
        z = a * math.sqrt(1.0 + 2.0 * u)
        return (
            n * math.log(a)
            + self.log_psi(u, m)
            - 0.5 * n * math.log1p(2.0 * u)
            + float(log_bessel_k_half(n, z))
            - float(log_bessel_k_half(1, z))
        )

    def sum_log_kappa(self, u, sizes, m=1):
        """``sum_j log kappa(u; sizes[j], m)``, vectorised over ``m``.

        ``m`` may be an array (used when scanning the number of components);
        the result then has the same shape.
        """
        sizes = np.asarray(sizes, dtype=np.intp)
        if sizes.size == 0 or np.any(sizes < 1):
            raise ValueError("cluster sizes must be >= 1")
        m_arr = np.atleast_1d(np.asarray(m))
        a = np.atleast_1d(np.asarray(self.effective_shape(m_arr), dtype=float))
        if a.shape != m_arr.shape:
            a = np.full(m_arr.shape, a[0])
        u = float(u)
        k = sizes.size
        n_tot = int(sizes.sum())
        if self.family == "gamma":
            lg = sc.gammaln(a[:, None] + sizes[None, :]).sum(axis=1)
            out = lg - k * sc.gammaln(a) - (n_tot + k * a) * math.log1p(u)
        else:
            z = a * math.sqrt(1.0 + 2.0 * u)
            table = _core.log_bessel_half_table(z, int(sizes.max()))
            counts = np.bincount(sizes, minlength=table.shape[1])
            log_ratio = table @ counts - k * table[:, 1]
            out = (
                n_tot * np.log(a)
                + k * (-a * 2.0 * u / (1.0 + math.sqrt(1.0 + 2.0 * u)))
                - 0.5 * n_tot * math.log1p(2.0 * u)
                + log_ratio
            )
        return float(out[0]) if np.ndim(m) == 0 else out

    # -- full conditionals of S ------------------------------------------

    def sample_log_allocated(self, rng, u, sizes, m=1):
        """Log draws of allocated weights, density prop. to ``exp(-uS) S^n h(S)``."""
        sizes = np.asarray(sizes, dtype=float)
        a = float(self.effective_shape(m))
        if self.family == "gamma":
            return np.atleast_1d(variates.log_gamma(rng, a + sizes, np.full(sizes.shape, 1.0 + u)))
        k = sizes.shape[0]
        return np.log(
            variates.gig_many(rng, np.full(k, 2.0 * u + 1.0), np.full(k, a * a), sizes - 0.5)
        )

    def sample_log_unallocated(self, rng, u, count, m=1):
        """Log draws of ``count`` empty-component weights, density prop. to ``exp(-uS) h(S)``."""
        count = int(count)
        if count == 0:
            return np.empty(0)
        a = float(self.effective_shape(m))
        if self.family == "gamma":
            return np.atleast_1d(variates.log_gamma(rng, np.full(count, a), np.full(count, 1.0 + u)))
        return np.log(
            variates.gig_many(
                rng, np.full(count, 2.0 * u + 1.0), np.full(count, a * a), np.full(count, -0.5)
            )
        )

    def sample_allocated_S(self, rng, u, n_m, m=1):
        return float(np.exp(self.sample_log_allocated(rng, u, [n_m], m)[0]))

    def sample_unallocated_S(self, rng, u, m=1):
        return float(np.exp(self.sample_log_unallocated(rng, u, 1, m)[0]))

    def sample_prior_log(self, rng, count, m=1):
        return self.sample_log_unallocated(rng, 0.0, count, m)


def log_nigau_density(alpha, pi):
    """Log density of the normalised inverse Gaussian distribution.

    Parameters
    ----------
    alpha : array_like, shape (d,)
        Positive shape parameters.
    pi : array_like, shape (d,)
        Point strictly inside the simplex (all entries positive, summing to 1).

    Notes
    -----
    The density involves ``K_{d/2}(sqrt(A))`` with
    ``A = sum_i alpha_i^2 / pi_i``.  Odd ``d`` uses the closed-form
    half-integer Bessel function; even ``d`` uses the integer-order
    recurrence from ``K_0`` and ``K_1``.  Intended for validation.
    """
    alpha = np.asarray(alpha, dtype=float)
    pi = np.asarray(pi, dtype=float)
    d = alpha.shape[0]
    if d < 2 or pi.shape != alpha.shape:
        raise ValueError("need matching alpha and pi of length >= 2")
    if np.any(alpha <= 0):
        raise ValueError("alpha must be positive")
    if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-10:
        raise ValueError("pi must lie strictly inside the simplex")
    big_a = float(np.sum(alpha**2 / pi))
    root = math.sqrt(big_a)
    if d % 2:
        log_k = float(log_bessel_k_half((d + 1) // 2, root))
    else:
        log_k = log_bessel_k_int(d // 2, root)
    return (
        alpha.sum()
        + np.log(alpha).sum()
        - (0.5 * d - 1.0) * math.log(2.0)
        - 0.5 * d * math.log(math.pi)
        + log_k
        - 1.5 * np.log(pi).sum()
        - 0.25 * d * math.log(big_a)
    )
