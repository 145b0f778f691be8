"""Posterior summaries of partitions, counts and densities.

Partitions are integer label vectors; any integer coding works and every
function here is invariant to relabelling.  Trace inputs are label
matrices of shape ``(draws, n)``.
"""

import math

import numpy as np
from scipy import optimize

from .special import upper_incomplete_gamma_neg

__all__ = [
    "adjusted_rand_index",
    "coclustering",
    "dahl_map",
    "dahl_losses",
    "modularity",
    "density_grid",
    "default_grid",
    "count_summary",
    "posterior_tables",
    "nigau_gini_variance",
    "nigau_expected_gini",
    "dirichlet_expected_gini",
    "gini_match",
]


def _canonical(labels):
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.intp)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()]


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return x * (x - 1) // 2


def adjusted_rand_index(a, b):
    """Hubert-Arabie adjusted Rand index.

    Returns 1 when the chance-corrected denominator vanishes, which happens
    only if both partitions are a single block or both are all singletons.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("partitions must be 1-d and of equal length")
    n = a.shape[0]
    ia = _canonical(a)
    ib = _canonical(b)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    # integer pair counts; a single final division keeps simple cases exact
    index = int(_comb2(table).sum())
    sa = int(_comb2(table.sum(axis=1)).sum())
    sb = int(_comb2(table.sum(axis=0)).sum())
    pairs = n * (n - 1) // 2
    num = 2 * (index * pairs - sa * sb)
    den = (sa + sb) * pairs - 2 * sa * sb
    if den == 0:
        return 1.0
    return num / den


def coclustering(label_matrix):
    """Posterior co-clustering probabilities from a ``(draws, n)`` label matrix."""
    L = np.atleast_2d(np.asarray(label_matrix))
    if L.shape[0] == 0 or L.size == 0:
        raise ValueError("empty trace")
    n = L.shape[1]
    P = np.zeros((n, n))
    for row in L:
        P += row[:, None] == row[None, :]
    return P / L.shape[0]


def dahl_losses(label_matrix, P=None):
    """Squared distance of each draw's co-clustering indicator to ``P``."""
    L = np.atleast_2d(np.asarray(label_matrix))
    if L.shape[0] == 0:
        raise ValueError("empty trace")
    if P is None:
        P = coclustering(L)
    total_p2 = float(np.sum(P * P))
    out = np.empty(L.shape[0])
    for d, row in enumerate(L):
        c = _canonical(row)
        k = int(c.max()) + 1
        Z = np.zeros((c.shape[0], k))
        Z[np.arange(c.shape[0]), c] = 1.0
        sizes = Z.sum(axis=0)
        out[d] = np.sum(sizes**2) - 2.0 * np.sum(Z * (P @ Z)) + total_p2
    return out


def dahl_map(label_matrix, P=None):
    """Least-squares partition among the recorded draws.

    Ties go to the earliest draw.  Returns the 1-based labels (in order of
    first appearance) and the index of the chosen draw.
    """
    L = np.atleast_2d(np.asarray(label_matrix))
    losses = dahl_losses(L, P)
    best = int(np.argmin(losses))
    return _canonical(L[best]) + 1, best


def modularity(adjacency, labels):
    """Newman's modularity of a partition of an undirected graph."""
    A = np.asarray(adjacency, dtype=float)
    labels = np.asarray(labels)
    if A.shape[0] != labels.shape[0]:
        raise ValueError("adjacency and labels disagree in size")
    two_m = A.sum()
    if two_m <= 0:
        raise ValueError("modularity is undefined for an edgeless graph")
    deg = A.sum(axis=1)
    c = _canonical(labels)
    k = int(c.max()) + 1
    Z = np.zeros((c.shape[0], k))
    Z[np.arange(c.shape[0]), c] = 1.0
    within = np.trace(Z.T @ A @ Z)
    dsum = Z.T @ deg
    return float(within / two_m - np.sum(dsum**2) / two_m**2)


def default_grid(y, points=512):
    """``points`` equally spaced values on ``[min - R/10, max + R/10]``."""
    y = np.asarray(y, dtype=float)
    lo, hi = float(y.min()), float(y.max())
    pad = (hi - lo) / 10.0
    return np.linspace(lo - pad, hi + pad, points)


def density_grid(weights, taus, grid):
    """Posterior mean of the mixture density on ``grid``.

    ``weights[d]`` are the normalised weights of draw ``d`` (all components,
    empty ones included) and ``taus[d]`` holds the matching ``mu`` and
    ``sigma2`` lists.
    """
    if not weights or not taus or len(weights) != len(taus):
        raise ValueError("density needs recorded weights and component parameters")
    grid = np.asarray(grid, dtype=float)
    out = np.zeros_like(grid)
    for w, tau in zip(weights, taus):
        w = np.asarray(w)
        mu = np.asarray(tau["mu"])
        s2 = np.asarray(tau["sigma2"])
        z = (grid[:, None] - mu[None, :]) ** 2 / s2[None, :]
        out += (np.exp(-0.5 * z) / np.sqrt(2.0 * math.pi * s2)[None, :]) @ w
    return out / len(weights)


def _type1_quantile(values, p):
    v = np.sort(np.asarray(values))
    idx = int(math.ceil(p * v.shape[0])) - 1
    return int(v[max(idx, 0)])


def count_summary(values):
    """pmf, mode, type-1 quartiles and mean of an integer series."""
    v = np.asarray(values, dtype=np.int64)
    if v.size == 0:
        raise ValueError("empty series")
    uniq, counts = np.unique(v, return_counts=True)
    pmf = {int(u): c / v.size for u, c in zip(uniq, counts)}
    return {
        "pmf": pmf,
        "mode": int(uniq[np.argmax(counts)]),
        "q1": _type1_quantile(v, 0.25),
        "q3": _type1_quantile(v, 0.75),
        "mean": float(v.mean()),
    }


def posterior_tables(M, k, M_na=None):
    """Summaries of ``M``, ``k`` and ``M_na`` plus ``P(M_na = 0)``."""
    M = np.asarray(M, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    derived = M - k
    if M_na is not None and not np.array_equal(np.asarray(M_na), derived):
        raise ValueError("recorded M_na disagrees with M - k")
    return {
        "M": count_summary(M),
        "k": count_summary(k),
        "M_na": count_summary(derived),
        "P_M_na_0": float(np.mean(derived == 0)),
    }


def nigau_gini_variance(alpha, d):
    """``Var[pi_i]`` for a symmetric normalised inverse Gaussian of dimension ``d``."""
    x = d * alpha
    return alpha * alpha * (d - 1) * math.exp(x) * upper_incomplete_gamma_neg(-2, x)


def nigau_expected_gini(alpha, d):
    """``E[sum_i pi_i (1 - pi_i)]`` under ``NIGau(alpha, ..., alpha)``."""
    return 1.0 - 1.0 / d - d * nigau_gini_variance(alpha, d)


def dirichlet_expected_gini(gamma, d):
    """``E[sum_i pi_i (1 - pi_i)]`` under ``Dirichlet(gamma, ..., gamma)``."""
    return 1.0 - 1.0 / d - (d - 1.0) / (d * (d * gamma + 1.0))


def gini_match(alpha, d, lo=1e-6, hi=1e3, xtol=1e-8):
    """Dirichlet shape whose expected Gini index equals that of ``NIGau(alpha)``."""
    if not alpha > 0 or int(d) < 2:
        raise ValueError("need alpha > 0 and d >= 2")
    d = int(d)
    target = nigau_expected_gini(alpha, d)

    def f(g):
        return dirichlet_expected_gini(g, d) - target

    if f(lo) * f(hi) > 0:
        raise ValueError("no matching Dirichlet shape in the search bracket")
    return float(optimize.bisect(f, lo, hi, xtol=xtol))
