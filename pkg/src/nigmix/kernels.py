"""Component likelihoods with their conjugate updates.

Every kernel owns the per-component parameters of one chain, stored as
arrays indexed by component.  The sampler talks to a kernel through a
small interface:

``update_labels(rng, labels, log_weights)``
    One allocation sweep; returns labels in ``0..M-1``.
``reorder(order)``
    Keep components ``order`` (in that order) and drop the rest.
``sample_posterior(rng, labels, k)``
    Redraw components ``0..k-1`` from their full conditionals.
``extend_prior(rng, count)``
    Append ``count`` components drawn from the prior.
``update_hypers(rng)``
    Redraw kernel hyperparameters given all current components.

Labels are 0-based internally.
"""

import math

import numpy as np
from scipy import special as sc

from . import _core
from . import variates

__all__ = [
    "UnivariateNormal",
    "MultivariateNormal",
    "StochasticBlockModel",
    "NullKernel",
    "wishart_fs",
]

_LOG_2PI = math.log(2.0 * math.pi)


def wishart_fs(rng, c, rate):
    """Wishart draw with density prop. to ``|X|^(c-(r+1)/2) exp(-tr(rate X))``.

    This is the standard Wishart with ``2c`` degrees of freedom and scale
    ``(2 rate)^-1``; its mean is ``c rate^-1``.
    """
    return variates.wishart(rng, 2.0 * c, np.linalg.inv(2.0 * rate))


def _sym(a):
    return 0.5 * (a + a.T)


class _Kernel:
    needs_sequential_labels = False

    def __init__(self, n):
        self.n = int(n)

    def log_likelihood_matrix(self):
        raise NotImplementedError

    def update_labels(self, rng, labels, log_weights):
        """Independent categorical allocations given weights and parameters."""
        lw = self.log_likelihood_matrix() + np.asarray(log_weights)[None, :]
        return variates.categorical_log(rng, lw)

    def log_likelihood(self, i, m, labels=None):
        return float(self.log_likelihood_matrix()[i, m])

    def hypers(self):
        return {}

    def record_taus(self):
        return {}


class NullKernel(_Kernel):
    """Likelihood identically one: the sampler then targets the prior."""

    def __init__(self, n):
        super().__init__(n)
        self.M = 0

    def log_likelihood_matrix(self):
        return np.zeros((self.n, self.M))

    def reorder(self, order):
        self.M = len(order)

    def sample_posterior(self, rng, labels, k):
        self.M = max(self.M, k)

    def extend_prior(self, rng, count):
        self.M += int(count)

    def update_hypers(self, rng):
        pass

    def initialise(self, rng, labels, M):
        self.M = M


class UnivariateNormal(_Kernel):
    """Normal kernel with a normal-inverse-gamma prior and hyperpriors.

    ``mu | sigma2 ~ N(m0, sigma2 / eta)``, ``sigma2 ~ IG(c0, C0)``,
    ``C0 ~ Gamma(d0, D0)`` and ``eta ~ Gamma(w, W)`` (shape/rate).

    Parameters
    ----------
    y : array_like, shape (n,)
    m0, d0, D0, c0, w, W : float, optional
        Defaults: ``m0 = (max + min) / 2``, ``d0 = 0.2``,
        ``D0 = 10 / (max + min)^2``, ``c0 = 2``, ``w = 0.5``, ``W = 50``.
    learn_hypers : bool
        If false, ``C0`` and ``eta`` stay at their starting values.
    """

    def __init__(self, y, m0=None, d0=0.2, D0=None, c0=2.0, w=0.5, W=50.0,
                 C0=None, eta=None, learn_hypers=True):
        y = np.asarray(y, dtype=float).ravel()
        super().__init__(y.shape[0])
        if self.n == 0:
            raise ValueError("no observations")
        self.y = y
        lo, hi = float(y.min()), float(y.max())
        self.m0 = 0.5 * (hi + lo) if m0 is None else float(m0)
        self.d0 = float(d0)
        self.D0 = 10.0 / (hi + lo) ** 2 if D0 is None else float(D0)
        self.c0 = float(c0)
        self.w = float(w)
        self.W = float(W)
        for name in ("d0", "D0", "c0", "w", "W"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        self.C0 = self.d0 / self.D0 if C0 is None else float(C0)
        self.eta = self.w / self.W if eta is None else float(eta)
        self.learn_hypers = learn_hypers
        self.mu = np.empty(0)
        self.sig2 = np.empty(0)

    @property
    def M(self):
        return self.mu.shape[0]

    def log_likelihood_matrix(self):
        r = self.y[:, None] - self.mu[None, :]
        return -0.5 * (_LOG_2PI + np.log(self.sig2)[None, :] + r * r / self.sig2[None, :])

    def log_likelihood(self, i, m, labels=None):
        r = self.y[i] - self.mu[m]
        return -0.5 * (_LOG_2PI + math.log(self.sig2[m]) + r * r / self.sig2[m])

    def reorder(self, order):
        order = np.asarray(order, dtype=np.intp)
        self.mu = self.mu[order]
        self.sig2 = self.sig2[order]

    def _draw(self, rng, counts, sums, sumsq):
        eta_n = self.eta + counts
        ybar = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
        m_n = (self.eta * self.m0 + sums) / eta_n
        ss = sumsq - counts * ybar**2
        c_n = self.c0 + 0.5 * counts
        C_n = self.C0 + 0.5 * (np.maximum(ss, 0.0) + self.eta * counts * (ybar - self.m0) ** 2 / eta_n)
        sig2 = variates.inverse_gamma(rng, c_n, C_n)
        mu = m_n + np.sqrt(sig2 / eta_n) * rng.standard_normal(counts.shape[0])
        return mu, sig2

    def sample_posterior(self, rng, labels, k):
        counts = np.bincount(labels, minlength=k)[:k].astype(float)
        sums = np.bincount(labels, weights=self.y, minlength=k)[:k]
        sumsq = np.bincount(labels, weights=self.y**2, minlength=k)[:k]
        mu, sig2 = self._draw(rng, counts, sums, sumsq)
        self.mu = np.concatenate([mu, self.mu[k:]])
        self.sig2 = np.concatenate([sig2, self.sig2[k:]])

    def extend_prior(self, rng, count):
        z = np.zeros(int(count))
        mu, sig2 = self._draw(rng, z, z, z)
        self.mu = np.concatenate([self.mu, mu])
        self.sig2 = np.concatenate([self.sig2, sig2])

    def initialise(self, rng, labels, M):
        k = int(labels.max()) + 1
        self.mu = np.empty(0)
        self.sig2 = np.empty(0)
        self.extend_prior(rng, k)
        self.sample_posterior(rng, labels, k)
        self.extend_prior(rng, M - k)

    def update_hypers(self, rng):
        if not self.learn_hypers:
            return
        M = self.M
        prec = 1.0 / self.sig2
        self.C0 = float(variates.gamma(rng, self.d0 + M * self.c0, self.D0 + prec.sum()))
        dev = 0.5 * np.sum((self.mu - self.m0) ** 2 * prec)
        self.eta = float(variates.gamma(rng, self.w + 0.5 * M, self.W + dev))

    def hypers(self):
        return {"C0": self.C0, "eta": self.eta}

    def record_taus(self):
        return {"mu": self.mu.tolist(), "sigma2": self.sig2.tolist()}

    def density(self, grid, log_pi):
        """Mixture density on ``grid`` with log weights ``log_pi``."""
        grid = np.asarray(grid, dtype=float)
        lw = np.asarray(log_pi)[None, :] - 0.5 * (
            _LOG_2PI + np.log(self.sig2)[None, :] + (grid[:, None] - self.mu[None, :]) ** 2 / self.sig2[None, :]
        )
        return np.exp(sc.logsumexp(lw, axis=1))


class MultivariateNormal(_Kernel):
    """Multivariate normal kernel with a hierarchical normal-Wishart prior.

    Component precisions ``P_m = Sigma_m^-1 ~ W(c0, C)`` and means
    ``mu_m ~ N(b0, B0)`` independently, with ``C ~ W(g0, G0)``.  Here
    ``W(c, R)`` has density proportional to ``|X|^(c-(r+1)/2) exp(-tr(R X))``
    (mean ``c R^-1``), see :func:`wishart_fs`.

    Defaults use the data: ``b0`` the coordinatewise median,
    ``B0 = diag(R_j^2)``, ``c0 = 2.5 + (r-1)/2``, ``g0 = 0.5 + (r-1)/2`` and
    ``G0 = 100 g0 / c0 diag(1 / R_j^2)`` with ``R_j`` the range of
    coordinate ``j``.
    """

    def __init__(self, y, b0=None, B0=None, c0=None, g0=None, G0=None, learn_hypers=True):
        y = np.asarray(y, dtype=float)
        if y.ndim != 2 or y.shape[0] == 0:
            raise ValueError("multivariate data must be a non-empty n x r matrix")
        super().__init__(y.shape[0])
        self.y = y
        r = y.shape[1]
        self.r = r
        rng_ = y.max(axis=0) - y.min(axis=0)
        if np.any(rng_ <= 0):
            raise ValueError("every coordinate needs a positive range")
        self.b0 = np.median(y, axis=0) if b0 is None else np.asarray(b0, dtype=float)
        self.B0 = np.diag(rng_**2) if B0 is None else np.asarray(B0, dtype=float)
        self.c0 = 2.5 + 0.5 * (r - 1) if c0 is None else float(c0)
        self.g0 = 0.5 + 0.5 * (r - 1) if g0 is None else float(g0)
        self.G0 = (100.0 * self.g0 / self.c0) * np.diag(1.0 / rng_**2) if G0 is None else np.asarray(G0, dtype=float)
        if not (self.c0 > 0.5 * (r - 1) and self.g0 > 0.5 * (r - 1)):
            raise ValueError("c0 and g0 must exceed (r - 1) / 2")
        self.B0_inv = np.linalg.inv(self.B0)
        self.B0_chol = np.linalg.cholesky(self.B0)
        self.B0_inv_b0 = self.B0_inv @ self.b0
        self.C = self.g0 * np.linalg.inv(self.G0)
        self.learn_hypers = learn_hypers
        self.mu = np.empty((0, r))
        self.prec = np.empty((0, r, r))
        self._chol = np.empty((0, r, r))

    @property
    def M(self):
        return self.mu.shape[0]

    def _refresh(self):
        self._chol = np.linalg.cholesky(self.prec)

    def log_likelihood_matrix(self):
        out = np.empty((self.n, self.M))
        half_logdet = np.log(np.diagonal(self._chol, axis1=1, axis2=2)).sum(axis=1)
        for m in range(self.M):
            z = (self.y - self.mu[m]) @ self._chol[m]
            out[:, m] = half_logdet[m] - 0.5 * np.einsum("ij,ij->i", z, z)
        return out - 0.5 * self.r * _LOG_2PI

    def log_likelihood(self, i, m, labels=None):
        z = (self.y[i] - self.mu[m]) @ self._chol[m]
        return float(
            np.log(np.diagonal(self._chol[m])).sum() - 0.5 * z @ z - 0.5 * self.r * _LOG_2PI
        )

    def reorder(self, order):
        order = np.asarray(order, dtype=np.intp)
        self.mu = self.mu[order]
        self.prec = self.prec[order]
        self._chol = self._chol[order]

    def _posterior_one(self, rng, ym, mu_old):
        nm = ym.shape[0]
        dev = ym - mu_old
        P = _sym(wishart_fs(rng, self.c0 + 0.5 * nm, self.C + 0.5 * dev.T @ dev))
        Bn_inv = self.B0_inv + nm * P
        Bn = _sym(np.linalg.inv(Bn_inv))
        bn = Bn @ (self.B0_inv_b0 + P @ ym.sum(axis=0))
        mu = variates.multivariate_normal(rng, bn, Bn)
        return mu, P

    def sample_posterior(self, rng, labels, k):
        order = np.argsort(labels, kind="stable")
        bounds = np.searchsorted(labels[order], np.arange(k + 1))
        for m in range(k):
            ym = self.y[order[bounds[m]:bounds[m + 1]]]
            self.mu[m], self.prec[m] = self._posterior_one(rng, ym, self.mu[m])
        self._refresh()

    def extend_prior(self, rng, count):
        count = int(count)
        if count == 0:
            return
        mus = np.empty((count, self.r))
        precs = np.empty((count, self.r, self.r))
        for j in range(count):
            mus[j] = variates.multivariate_normal(rng, self.b0, chol=self.B0_chol)
            precs[j] = _sym(wishart_fs(rng, self.c0, self.C))
        self.mu = np.concatenate([self.mu, mus])
        self.prec = np.concatenate([self.prec, precs])
        self._refresh()

    def initialise(self, rng, labels, M):
        k = int(labels.max()) + 1
        self.mu = np.stack([self.y[labels == m].mean(axis=0) for m in range(k)])
        self.prec = np.empty((k, self.r, self.r))
        self.prec[:] = np.eye(self.r)
        self.sample_posterior(rng, labels, k)
        self.extend_prior(rng, M - k)

    def update_hypers(self, rng):
        if not self.learn_hypers:
            return
        self.C = _sym(wishart_fs(rng, self.g0 + self.M * self.c0, self.G0 + self.prec.sum(axis=0)))

    def hypers(self):
        return {"C": self.C.tolist()}


class StochasticBlockModel(_Kernel):
    """Bernoulli stochastic block model on an undirected simple graph.

    ``A_ij | c ~ Bernoulli(Q[c_i, c_j])`` for ``i < j`` with symmetric
    ``Q`` whose entries are ``Beta(a_q, b_q)`` a priori.
    """

    needs_sequential_labels = True

    def __init__(self, adjacency, a_q=1.0, b_q=1.0):
        A = np.asarray(adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("adjacency must have a zero diagonal (no self-loops)")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        super().__init__(A.shape[0])
        self.A = A.astype(np.int64)
        self.A.setflags(write=False)
        self.a_q = float(a_q)
        self.b_q = float(b_q)
        if not (self.a_q > 0 and self.b_q > 0):
            raise ValueError("a_q and b_q must be positive")
        rows, cols = np.nonzero(self.A)
        self.indptr = np.searchsorted(rows, np.arange(self.n + 1)).astype(np.intp)
        self.indices = cols.astype(np.intp)
        self.Q = np.empty((0, 0))

    @property
    def M(self):
        return self.Q.shape[0]

    def neighbour_counts(self, labels, M):
        onehot = np.zeros((self.n, M), dtype=np.int64)
        onehot[np.arange(self.n), labels] = 1
        return np.ascontiguousarray(self.A @ onehot, dtype=np.intp)

    def block_stats(self, labels, k):
        """Edge counts ``e`` and dyad counts ``t`` between blocks ``0..k-1``."""
        onehot = np.zeros((self.n, k), dtype=np.int64)
        onehot[np.arange(self.n), labels] = 1
        e = onehot.T @ self.A @ onehot
        sizes = onehot.sum(axis=0)
        t = np.outer(sizes, sizes)
        np.fill_diagonal(e, np.diag(e) // 2)
        np.fill_diagonal(t, sizes * (sizes - 1) // 2)
        return e, t

    def _clip(self):
        tiny = np.finfo(float).tiny
        np.clip(self.Q, tiny, 1.0 - np.finfo(float).epsneg, out=self.Q)

    def log_likelihood(self, i, m, labels=None):
        others = np.delete(np.arange(self.n), i)
        q = self.Q[m, labels[others]]
        a = self.A[i, others]
        return float(np.sum(a * np.log(q) + (1 - a) * np.log1p(-q)))

    def update_labels(self, rng, labels, log_weights):
        M = self.M
        labels = np.ascontiguousarray(labels, dtype=np.intp).copy()
        counts = self.neighbour_counts(labels, M)
        sizes = np.bincount(labels, minlength=M).astype(np.intp)
        logq = np.ascontiguousarray(np.log(self.Q))
        log1mq = np.ascontiguousarray(np.log1p(-self.Q))
        u = rng.random(self.n)
        _core.sbm_sweep(
            self.indptr, self.indices, labels, counts, sizes, logq, log1mq,
            np.ascontiguousarray(log_weights, dtype=float), u,
        )
        return labels

    def reorder(self, order):
        order = np.asarray(order, dtype=np.intp)
        self.Q = self.Q[np.ix_(order, order)]

    def sample_posterior(self, rng, labels, k):
        e, t = self.block_stats(labels, k)
        iu = np.triu_indices(k)
        draws = variates.beta(rng, self.a_q + e[iu], self.b_q + t[iu] - e[iu])
        Q = self.Q.copy()
        sub = np.empty((k, k))
        sub[iu] = draws
        sub.T[iu] = draws
        Q[:k, :k] = sub
        self.Q = Q
        self._clip()

    def extend_prior(self, rng, count):
        count = int(count)
        if count == 0:
            return
        M_old = self.M
        M = M_old + count
        Q = np.empty((M, M))
        Q[:M_old, :M_old] = self.Q
        # fresh entries for every pair involving a new component
        rows, cols = np.triu_indices(M)
        new = cols >= M_old
        draws = variates.beta(rng, self.a_q, self.b_q, size=int(new.sum()))
        Q[rows[new], cols[new]] = draws
        Q[cols[new], rows[new]] = draws
        self.Q = Q
        self._clip()

    def initialise(self, rng, labels, M):
        k = int(labels.max()) + 1
        self.Q = np.empty((0, 0))
        self.extend_prior(rng, k)
        self.sample_posterior(rng, labels, k)
        self.extend_prior(rng, M - k)

    def update_hypers(self, rng):
        pass

    def record_taus(self):
        return {"Q": self.Q.tolist()}
