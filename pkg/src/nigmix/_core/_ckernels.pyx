# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, sqrt, cos, acos, pi
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double FOUR_PI_THIRDS = 4.0 * pi / 3.0


cdef inline double _next(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef inline double _log_quasi(double x, double lam, double omega) noexcept nogil:
    return (lam - 1.0) * log(x) - 0.5 * omega * (x + 1.0 / x)


cdef inline double _mode(double lam, double omega) noexcept nogil:
    if lam >= 1.0:
        return ((lam - 1.0) + sqrt((lam - 1.0) * (lam - 1.0) + omega * omega)) / omega
    return omega / ((1.0 - lam) + sqrt((1.0 - lam) * (1.0 - lam) + omega * omega))


cdef double _rou_noshift(bitgen_t *bg, double lam, double omega) noexcept nogil:
    cdef double m = _mode(lam, omega)
    cdef double lm = _log_quasi(m, lam, omega)
    cdef double xp = ((lam + 1.0) + sqrt((lam + 1.0) * (lam + 1.0) + omega * omega)) / omega
    cdef double vp = xp * exp(0.5 * (_log_quasi(xp, lam, omega) - lm))
    cdef double u, v, x
    while True:
        u = _next(bg)
        v = _next(bg) * vp
        if u <= 0.0:
            continue
        x = v / u
        if x <= 0.0:
            continue
        if 2.0 * log(u) <= _log_quasi(x, lam, omega) - lm:
            return x


cdef double _rou_shift(bitgen_t *bg, double lam, double omega) noexcept nogil:
    cdef double m = _mode(lam, omega)
    cdef double lm = _log_quasi(m, lam, omega)
    cdef double a = -(2.0 * (lam + 1.0) / omega + m)
    cdef double b = 2.0 * (lam - 1.0) * m / omega - 1.0
    cdef double c = m
    cdef double p = b - a * a / 3.0
    cdef double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c
    cdef double arg = -0.5 * q * sqrt(-27.0 / (p * p * p))
    if arg > 1.0:
        arg = 1.0
    elif arg < -1.0:
        arg = -1.0
    cdef double phi = acos(arg)
    cdef double fd = sqrt(-4.0 * p / 3.0)
    cdef double x_lo = fd * cos(phi / 3.0 + FOUR_PI_THIRDS) - a / 3.0
    cdef double x_hi = fd * cos(phi / 3.0) - a / 3.0
    cdef double v_lo = (x_lo - m) * exp(0.5 * (_log_quasi(x_lo, lam, omega) - lm))
    cdef double v_hi = (x_hi - m) * exp(0.5 * (_log_quasi(x_hi, lam, omega) - lm))
    cdef double u, v, x
    while True:
        u = _next(bg)
        v = v_lo + _next(bg) * (v_hi - v_lo)
        if u <= 0.0:
            continue
        x = v / u + m
        if x <= 0.0:
            continue
        if 2.0 * log(u) <= _log_quasi(x, lam, omega) - lm:
            return x


cdef double _small(bitgen_t *bg, double lam, double omega) noexcept nogil:
    cdef double m = _mode(lam, omega)
    cdef double x0 = omega / (1.0 - lam)
    cdef double xs = x0 if x0 > 2.0 / omega else 2.0 / omega
    cdef double k1 = exp(_log_quasi(m, lam, omega))
    cdef double a1 = k1 * x0
    cdef double k2, a2
    if x0 < 2.0 / omega:
        k2 = exp(-omega)
        if lam > 0.0:
            a2 = k2 * (xs ** lam - x0 ** lam) / lam
        else:
            a2 = k2 * log(xs / x0)
    else:
        k2 = 0.0
        a2 = 0.0
    cdef double k3 = xs ** (lam - 1.0)
    cdef double tail = exp(-0.5 * xs * omega)
    cdef double a3 = 2.0 * k3 * tail / omega
    cdef double total = a1 + a2 + a3
    cdef double u, v, x, h, y
    while True:
        u = _next(bg)
        v = _next(bg) * total
        if v <= a1:
            x = x0 * v / a1
            h = k1
        elif v <= a1 + a2:
            v -= a1
            if lam > 0.0:
                x = (x0 ** lam + v * lam / k2) ** (1.0 / lam)
            else:
                x = x0 * exp(v / k2)
            h = k2 * x ** (lam - 1.0)
        else:
            v -= a1 + a2
            y = tail - v * omega / (2.0 * k3)
            if y <= 0.0:
                continue
            x = -2.0 / omega * log(y)
            h = k3 * exp(-0.5 * x * omega)
        if x <= 0.0:
            continue
        if u * h <= exp(_log_quasi(x, lam, omega)):
            return x


cdef double _gig_standard(bitgen_t *bg, double lam, double omega) noexcept nogil:
    cdef bint flip = lam < 0.0
    cdef double x
    if flip:
        lam = -lam
    if lam >= 1.0 or omega > 1.0:
        x = _rou_shift(bg, lam, omega)
    elif omega >= min(0.5, 2.0 * sqrt(1.0 - lam) / 3.0):
        x = _rou_noshift(bg, lam, omega)
    else:
        x = _small(bg, lam, omega)
    return 1.0 / x if flip else x


def gig_fill(rng, lam, omega):
    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] om_v = np.ascontiguousarray(omega, dtype=np.float64)
    cdef Py_ssize_t n = lam_v.shape[0], i
    out = np.empty(n)
    cdef double[::1] out_v = out
    bit_generator = rng.bit_generator
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")
    with bit_generator.lock, nogil:
        for i in range(n):
            out_v[i] = _gig_standard(bg, lam_v[i], om_v[i])
    return out


def categorical_from_log(logw, uniforms):
    cdef double[:, ::1] lw = np.ascontiguousarray(logw, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n = lw.shape[0], k = lw.shape[1], i, j
    out = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] ov = out
    cdef double[::1] cdf = np.empty(k)
    cdef double mx, target
    with nogil:
        for i in range(n):
            mx = lw[i, 0]
            for j in range(1, k):
                if lw[i, j] > mx:
                    mx = lw[i, j]
            cdf[0] = exp(lw[i, 0] - mx)
            for j in range(1, k):
                cdf[j] = cdf[j - 1] + exp(lw[i, j] - mx)
            target = uv[i] * cdf[k - 1]
            j = 0
            while j < k - 1 and cdf[j] <= target:
                j += 1
            ov[i] = j
    return out


def sbm_sweep(indptr, indices, labels, nbr_counts, sizes, logq, log1mq, log_s, uniforms):
    cdef Py_ssize_t[::1] ip = indptr
    cdef Py_ssize_t[::1] ix = indices
    cdef Py_ssize_t[::1] lab = labels
    cdef Py_ssize_t[:, ::1] nc = nbr_counts
    cdef Py_ssize_t[::1] sz = sizes
    cdef double[:, ::1] lq = logq
    cdef double[:, ::1] l1q = log1mq
    cdef double[::1] ls = log_s
    cdef double[::1] uv = uniforms
    cdef Py_ssize_t n = lab.shape[0], k = lq.shape[0], i, j, r, old, new, t
    cdef double[::1] ll = np.empty(k)
    cdef double mx, acc, target
    with nogil:
        for i in range(n):
            old = lab[i]
            sz[old] -= 1
            for j in range(k):
                acc = 0.0
                for r in range(k):
                    acc = acc + lq[j, r] * nc[i, r]
                for r in range(k):
                    acc = acc + l1q[j, r] * (sz[r] - nc[i, r])
                ll[j] = acc + ls[j]
            mx = ll[0]
            for j in range(1, k):
                if ll[j] > mx:
                    mx = ll[j]
            ll[0] = exp(ll[0] - mx)
            for j in range(1, k):
                ll[j] = ll[j - 1] + exp(ll[j] - mx)
            target = uv[i] * ll[k - 1]
            new = 0
            while new < k - 1 and ll[new] <= target:
                new += 1
            lab[i] = new
            sz[new] += 1
            if new != old:
                for t in range(ip[i], ip[i + 1]):
                    nc[ix[t], old] -= 1
                    nc[ix[t], new] += 1
    return labels


def log_bessel_half_table(z, Py_ssize_t n_max):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t m = zv.shape[0], i, n
    out = np.empty((m, n_max + 1))
    cdef double[:, ::1] ov = out
    cdef double base, ratio
    cdef double half_log_half_pi = 0.5 * log(0.5 * pi)
    with nogil:
        for i in range(m):
            base = half_log_half_pi - 0.5 * log(zv[i]) - zv[i]
            ov[i, 0] = base
            if n_max >= 1:
                ov[i, 1] = base
            ratio = 1.0
            for n in range(1, n_max):
                ratio = 1.0 / ratio + (2.0 * n - 1.0) / zv[i]
                ov[i, n + 1] = ov[i, n] + log(ratio)
    return out
