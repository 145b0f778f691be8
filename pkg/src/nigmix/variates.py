"""Seeded random variates.

Every chain owns one :class:`numpy.random.Generator` backed by PCG64.
Streams for parallel chains come from :meth:`numpy.random.SeedSequence.spawn`,
which yields statistically independent, non-overlapping children, so a run
is reproducible from a single integer seed whatever the chain layout.

Parameterisations follow the model code throughout: gamma variates use
shape/rate (mean ``shape / rate``), Wishart ``W(df, V)`` has mean ``df * V``
and the generalized inverse Gaussian ``GIG(a, b, c)`` has density
proportional to ``s^(c-1) exp(-(a s + b / s) / 2)``.
"""

import functools
import math

import numpy as np
from scipy import special as sc

from . import _core

__all__ = [
    "make_rng",
    "spawn_rngs",
    "gamma",
    "log_gamma",
    "inverse_gamma",
    "beta",
    "poisson",
    "normal",
    "categorical",
    "categorical_log",
    "multivariate_normal",
    "wishart",
    "inverse_wishart",
    "gig",
    "gig_many",
]


def make_rng(seed):
    """Generator for a single chain."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed, count):
    """``count`` independent generators derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def _positive(name, value):
    if np.any(~(np.asarray(value) > 0)):
        raise ValueError(f"{name} must be strictly positive")


def gamma(rng, shape, rate, size=None):
    _positive("shape", shape)
    _positive("rate", rate)
    return rng.standard_gamma(shape, size=size) / rate


def log_gamma(rng, shape, rate):
    """Log of a Gamma(shape, rate) draw, safe for tiny shapes.

    For ``shape < 1`` uses ``G(a) = G(a + 1) * U^(1/a)`` in log space, which
    never underflows to ``-inf`` the way a direct draw does when ``a`` is of
    order 1e-3.
    """
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    _positive("shape", shape)
    _positive("rate", rate)
    shape, rate = np.broadcast_arrays(shape, rate)
    small = shape < 1.0
    g = rng.standard_gamma(np.where(small, shape + 1.0, shape))
    out = np.log(g) - np.log(rate)
    if np.any(small):
        u = rng.random(shape.shape)
        out = np.where(small, out + np.log(u) / np.where(small, shape, 1.0), out)
    return out[()] if out.ndim == 0 else out


def inverse_gamma(rng, shape, scale, size=None):
    """Inverse-gamma with density proportional to ``x^(-shape-1) exp(-scale/x)``."""
    _positive("shape", shape)
    _positive("scale", scale)
    return scale / rng.standard_gamma(shape, size=size)


def beta(rng, a, b, size=None):
    _positive("a", a)
    _positive("b", b)
    return rng.beta(a, b, size=size)


def poisson(rng, lam, size=None):
    if np.any(np.asarray(lam) < 0):
        raise ValueError("Poisson mean must be non-negative")
    return rng.poisson(lam, size=size)


def normal(rng, mean, sd, size=None):
    return rng.normal(mean, sd, size=size)


def categorical(rng, weights):
    """Index drawn with probability proportional to ``weights``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a finite non-negative vector")
    total = w.sum()
    if not total > 0:
        raise ValueError("categorical weights are all zero")
    cdf = np.cumsum(w)
    idx = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    return min(idx, w.size - 1)


def categorical_log(rng, log_weights):
    """Row-wise categorical draws from unnormalised log weights.

    ``log_weights`` is ``(n, k)``; returns ``n`` indices.  One uniform is
    consumed per row.
    """
    lw = np.atleast_2d(np.asarray(log_weights, dtype=float))
    if not np.all(np.isfinite(lw.max(axis=1))):
        raise ValueError("each row needs at least one finite log weight")
    u = rng.random(lw.shape[0])
    return _core.categorical_from_log(lw, u)


def multivariate_normal(rng, mean, cov=None, chol=None):
    """Draw ``mean + L z`` with ``L`` the lower Cholesky factor of ``cov``."""
    mean = np.asarray(mean, dtype=float)
    if chol is None:
        chol = np.linalg.cholesky(cov)
    return mean + chol @ rng.standard_normal(mean.shape[0])


@functools.lru_cache(maxsize=16)
def _bartlett_layout(r):
    return np.diag_indices(r), np.tril_indices(r, -1), np.arange(r, dtype=float)


def wishart(rng, df, scale=None, chol=None):
    """Wishart ``W(df, scale)`` by the Bartlett decomposition (mean ``df * scale``)."""
    if chol is None:
        chol = np.linalg.cholesky(scale)
    r = chol.shape[0]
    if not df > r - 1:
        raise ValueError("Wishart degrees of freedom must exceed dimension - 1")
    diag, lower, offsets = _bartlett_layout(r)
    a = np.zeros((r, r))
    a[diag] = np.sqrt(rng.chisquare(df - offsets))
    a[lower] = rng.standard_normal(lower[0].shape[0])
    la = chol @ a
    return la @ la.T


def inverse_wishart(rng, df, scale):
    """Inverse Wishart ``IW(df, scale)``: the inverse of ``W(df, scale^-1)``."""
    return np.linalg.inv(wishart(rng, df, np.linalg.inv(scale)))


def gig(rng, a, b, c):
    """One draw from ``GIG(a, b, c)`` with ``a, b > 0``."""
    return float(gig_many(rng, np.array([a]), np.array([b]), np.array([c]))[0])


def gig_many(rng, a, b, c):
    """Vector of independent ``GIG(a_i, b_i, c_i)`` draws.

    Reduced to the two-parameter form ``x^(c-1) exp(-w (x + 1/x) / 2)`` with
    ``w = sqrt(a b)`` and rescaled by ``sqrt(b / a)``.  The draws use exact
    ratio-of-uniforms (with and without mode shift) or a three-piece
    rejection envelope, whichever is efficient for the parameters.
    """
    a, b, c = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float)
    )
    if np.any(~(a > 0)) or np.any(~(b > 0)) or not np.all(np.isfinite(c)):
        raise ValueError("GIG requires a > 0, b > 0 and finite c")
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    omega = np.sqrt(a * b)
    x = _core.gig_fill(rng, c, omega)
    return x * np.sqrt(b / a)


def log_gig_many(rng, a, b, c):
    return np.log(gig_many(rng, a, b, c))


def gig_mean(a, b, c):
    """Exact mean of ``GIG(a, b, c)`` through Bessel function ratios."""
    w = math.sqrt(a * b)
    return math.sqrt(b / a) * sc.kve(c + 1, w) / sc.kve(c, w)
