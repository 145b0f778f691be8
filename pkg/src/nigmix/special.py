"""Special functions evaluated in log space.

Only what the weight models need: modified Bessel functions of the second
kind at half-integer order (closed-form finite sums), the upper incomplete
gamma function at non-positive integer order, and a guarded log-sum-exp.
"""

import math

import numpy as np
from scipy import special as sc

__all__ = [
    "log_bessel_k_half",
    "bessel_k_half",
    "log_bessel_k_int",
    "upper_incomplete_gamma_neg",
    "log_sum_exp",
]

_LOG_HALF_PI = 0.5 * math.log(0.5 * math.pi)


def _check_positive(z):
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise ValueError("argument must be strictly positive")
    return z


def log_bessel_k_half(n, z):
    """Log of ``K_{n-1/2}(z)`` for a non-negative integer ``n``.

    Uses ``K_{p+1/2}(z) = K_{1/2}(z) * sum_{s=0}^{p} (p+s)! / (s! (p-s)!) (2z)^{-s}``
    with ``K_{1/2}(z) = K_{-1/2}(z) = sqrt(pi / (2z)) exp(-z)``; the sum is
    accumulated with log-sum-exp so large orders and tiny ``z`` stay finite.

    Parameters
    ----------
    n : int
        Order index; the Bessel order is ``n - 1/2``.
    z : float or array_like
        Positive argument(s).

    Returns
    -------
    float or ndarray
        ``log K_{n-1/2}(z)``, same shape as ``z``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("order index must be non-negative")
    z = _check_positive(z)
    log_k_half = _LOG_HALF_PI - 0.5 * np.log(z) - z
    p = n - 1 if n >= 1 else 0
    if p == 0:
        out = log_k_half
    else:
        s = np.arange(p + 1, dtype=float)
        log_coef = sc.gammaln(p + s + 1) - sc.gammaln(s + 1) - sc.gammaln(p - s + 1)
        terms = log_coef[:, None] - s[:, None] * np.log(2.0 * z).reshape(1, -1)
        out = log_k_half + sc.logsumexp(terms, axis=0).reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def bessel_k_half(n, z):
    """``K_{n-1/2}(z)``; see :func:`log_bessel_k_half`."""
    return np.exp(log_bessel_k_half(n, z))


def log_bessel_k_int(order, z):
    """Log of ``K_order(z)`` for a non-negative integer order.

    Starts from the exponentially scaled ``K_0`` and ``K_1`` and runs the
    upward recurrence ``K_{v+1} = K_{v-1} + (2v/z) K_v``, which is stable
    for the second-kind functions.  Used only to validate densities.
    """
    order = abs(int(order))
    z = float(_check_positive(z))
    k_prev, k_cur = sc.k0e(z), sc.k1e(z)
    if order == 0:
        return math.log(k_prev) - z
    for v in range(1, order):
        k_prev, k_cur = k_cur, k_prev + (2.0 * v / z) * k_cur
    return math.log(k_cur) - z


def upper_incomplete_gamma_neg(s, x):
    """Upper incomplete gamma ``Gamma(s, x)`` for an integer ``s <= 1``.

    ``Gamma(1, x) = exp(-x)`` and ``Gamma(0, x) = E_1(x)``; lower orders
    follow from ``Gamma(s, x) = (Gamma(s+1, x) - x^s exp(-x)) / s``.

    Parameters
    ----------
    s : int
        Order, at most 1 (the Gini utilities use ``s = -2``).
    x : float
        Positive argument.
    """
    s = int(s)
    if s > 1:
        raise ValueError("only integer orders s <= 1 are supported")
    x = float(x)
    if not x > 0:
        raise ValueError("x must be strictly positive")
    if s == 1:
        return math.exp(-x)
    value = float(sc.exp1(x))
    ex = math.exp(-x)
    for order in range(-1, s - 1, -1):
        value = (value - x**order * ex) / order
    return value


def log_sum_exp(values):
    """``log(sum(exp(values)))`` without overflow."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("log_sum_exp of an empty sequence")
    return float(sc.logsumexp(values))
