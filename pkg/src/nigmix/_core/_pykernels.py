"""Pure-Python implementations of the hot kernels.

Each function mirrors its counterpart in ``_ckernels.pyx`` exactly: the same
uniforms are consumed from the generator in the same order, so both backends
produce the same draws for the same seed.
"""

import math

import numpy as np

_FOUR_PI_THIRDS = 4.0 * math.pi / 3.0


def _log_quasi(x, lam, omega):
    return (lam - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x)


def _mode(lam, omega):
    if lam >= 1.0:
        return ((lam - 1.0) + math.sqrt((lam - 1.0) ** 2 + omega * omega)) / omega
    return omega / ((1.0 - lam) + math.sqrt((1.0 - lam) ** 2 + omega * omega))


def _gig_rou_noshift(random, lam, omega):
    m = _mode(lam, omega)
    lm = _log_quasi(m, lam, omega)
    xp = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    vp = xp * math.exp(0.5 * (_log_quasi(xp, lam, omega) - lm))
    while True:
        u = random()
        v = random() * vp
        if u <= 0.0:
            continue
        x = v / u
        if x <= 0.0:
            continue
        if 2.0 * math.log(u) <= _log_quasi(x, lam, omega) - lm:
            return x


def _gig_rou_shift(random, lam, omega):
    m = _mode(lam, omega)
    lm = _log_quasi(m, lam, omega)
    # extremes of (x - m) sqrt(g(x)) are roots of x^3 + a x^2 + b x + c
    a = -(2.0 * (lam + 1.0) / omega + m)
    b = 2.0 * (lam - 1.0) * m / omega - 1.0
    c = m
    p = b - a * a / 3.0
    q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c
    arg = -0.5 * q * math.sqrt(-27.0 / (p * p * p))
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg)
    fd = math.sqrt(-4.0 * p / 3.0)
    x_lo = fd * math.cos(phi / 3.0 + _FOUR_PI_THIRDS) - a / 3.0
    x_hi = fd * math.cos(phi / 3.0) - a / 3.0
    v_lo = (x_lo - m) * math.exp(0.5 * (_log_quasi(x_lo, lam, omega) - lm))
    v_hi = (x_hi - m) * math.exp(0.5 * (_log_quasi(x_hi, lam, omega) - lm))
    while True:
        u = random()
        v = v_lo + random() * (v_hi - v_lo)
        if u <= 0.0:
            continue
        x = v / u + m
        if x <= 0.0:
            continue
        if 2.0 * math.log(u) <= _log_quasi(x, lam, omega) - lm:
            return x


def _gig_small(random, lam, omega):
    # three-piece envelope: constant / power / exponential tail; 0 <= lam < 1
    m = _mode(lam, omega)
    x0 = omega / (1.0 - lam)
    xs = max(x0, 2.0 / omega)
    k1 = math.exp(_log_quasi(m, lam, omega))
    a1 = k1 * x0
    if x0 < 2.0 / omega:
        k2 = math.exp(-omega)
        if lam > 0.0:
            a2 = k2 * (xs**lam - x0**lam) / lam
        else:
            a2 = k2 * math.log(xs / x0)
    else:
        k2 = 0.0
        a2 = 0.0
    k3 = xs ** (lam - 1.0)
    tail = math.exp(-0.5 * xs * omega)
    a3 = 2.0 * k3 * tail / omega
    total = a1 + a2 + a3
    while True:
        u = random()
        v = random() * total
        if v <= a1:
            x = x0 * v / a1
            h = k1
        elif v <= a1 + a2:
            v -= a1
            if lam > 0.0:
                x = (x0**lam + v * lam / k2) ** (1.0 / lam)
            else:
                x = x0 * math.exp(v / k2)
            h = k2 * x ** (lam - 1.0)
        else:
            v -= a1 + a2
            y = tail - v * omega / (2.0 * k3)
            if y <= 0.0:
                continue
            x = -2.0 / omega * math.log(y)
            h = k3 * math.exp(-0.5 * x * omega)
        if x <= 0.0:
            continue
        if u * h <= math.exp(_log_quasi(x, lam, omega)):
            return x


def gig_standard(random, lam, omega):
    """Draw from the density proportional to ``x^(lam-1) exp(-omega (x + 1/x) / 2)``."""
    flip = lam < 0.0
    if flip:
        lam = -lam
    if lam >= 1.0 or omega > 1.0:
        x = _gig_rou_shift(random, lam, omega)
    elif omega >= min(0.5, 2.0 * math.sqrt(1.0 - lam) / 3.0):
        x = _gig_rou_noshift(random, lam, omega)
    else:
        x = _gig_small(random, lam, omega)
    return 1.0 / x if flip else x


def gig_fill(rng, lam, omega):
    """Standardised GIG draws for parameter arrays ``lam``, ``omega``."""
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    random = rng.random
    out = np.empty(lam.shape[0])
    for i in range(lam.shape[0]):
        out[i] = gig_standard(random, lam[i], omega[i])
    return out


def categorical_from_log(logw, uniforms):
    """Row-wise inverse-cdf draws from unnormalised log weights."""
    logw = np.asarray(logw, dtype=np.float64)
    w = np.exp(logw - logw.max(axis=1, keepdims=True))
    cdf = np.cumsum(w, axis=1)
    target = uniforms * cdf[:, -1]
    idx = (cdf <= target[:, None]).sum(axis=1)
    return np.minimum(idx, logw.shape[1] - 1).astype(np.intp)


def sbm_sweep(indptr, indices, labels, nbr_counts, sizes, logq, log1mq, log_s, uniforms):
    """Sequential-scan label update for the Bernoulli block model.

    ``nbr_counts[i, r]`` holds the number of neighbours of node ``i`` in block
    ``r`` and ``sizes[r]`` the block sizes; both are kept in sync in place.
    """
    n = labels.shape[0]
    for i in range(n):
        old = labels[i]
        sizes[old] -= 1
        e = nbr_counts[i]
        non = sizes - e
        ll = logq @ e + log1mq @ non + log_s
        w = np.exp(ll - ll.max())
        cdf = np.cumsum(w)
        new = int((cdf <= uniforms[i] * cdf[-1]).sum())
        if new >= cdf.shape[0]:
            new = cdf.shape[0] - 1
        labels[i] = new
        sizes[new] += 1
        if new != old:
            nbrs = indices[indptr[i]:indptr[i + 1]]
            nbr_counts[nbrs, old] -= 1
            nbr_counts[nbrs, new] += 1
    return labels


def log_bessel_half_table(z, n_max):
    """``table[i, n] = log K_{n-1/2}(z[i])`` for ``n = 0..n_max``.

    Runs the forward recurrence on the ratio ``K_{n+1/2} / K_{n-1/2}``.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty((z.shape[0], n_max + 1))
    base = 0.5 * math.log(0.5 * math.pi) - 0.5 * np.log(z) - z
    out[:, 0] = base
    if n_max >= 1:
        out[:, 1] = base
    ratio = np.ones_like(z)
    for n in range(1, n_max):
        # r_n = K_{n+1/2} / K_{n-1/2} = 1 / r_{n-1} + (2n - 1) / z
        ratio = 1.0 / ratio + (2.0 * n - 1.0) / z
        out[:, n + 1] = out[:, n] + np.log(ratio)
    return out
