"""MCMC for mixtures of finite mixtures.

Two samplers share one chain state:

``blocked_gibbs``
    Conditional sampler for static weight models.  The latent
    ``U_n ~ Gamma(n, T)`` makes the unnormalised weights conditionally
    independent, so every block has a closed-form full conditional.
``telescoping``
    Draws ``M`` given the partition over ``{k, ..., M_max}``; needed for
    dynamic weight models, valid for static ones too.

Per iteration (both samplers): ``U_n``; allocations; compaction of the
allocated components to ``0..k-1``; count-prior hypers (and optionally
the weight shape); the empty-component count; allocated weights;
allocated parameters; empty weights; empty parameters drawn from the
prior; kernel hyperparameters.
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats
from scipy.cluster.vq import kmeans2, whiten

from .kernels import NullKernel, StochasticBlockModel

__all__ = [
    "SamplerConfig",
    "ChainState",
    "Trace",
    "SamplerError",
    "Chain",
    "relabel",
    "run_chain",
    "run_blocked_gibbs",
    "run_telescoping",
]

ALGORITHMS = ("blocked_gibbs", "telescoping")


class SamplerError(RuntimeError):
    """Numerical or configuration failure inside a sweep."""


@dataclass
class SamplerConfig:
    """Run-length and algorithm settings.

    ``record`` selects optional per-draw fields: ``labels``, ``weights``
    (normalised, all ``M`` components) and ``taus`` (component parameters).
    """

    algorithm: str = "blocked_gibbs"
    iters: int = 2000
    burnin: int = 1000
    thin: int = 1
    M_max: int = 100
    init_M: int = None
    learn_shape: bool = False
    shape_prior: tuple = (6.0, 3.0)
    shape_step: float = 0.3
    record: tuple = ("labels",)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not (self.iters > self.burnin >= 0):
            raise ValueError("need iters > burnin >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.M_max < 1:
            raise ValueError("M_max must be >= 1")
        self.record = tuple(self.record)
        bad = set(self.record) - {"labels", "weights", "taus"}
        if bad:
            raise ValueError(f"unknown record fields {sorted(bad)}")


@dataclass
class ChainState:
    """One iterate; ``labels`` are 0-based with allocated components first."""

    labels: np.ndarray
    log_S: np.ndarray
    log_u: float
    k: int
    M: int
    shape: float
    lam: float = None
    b_lambda: float = None

    @property
    def M_na(self):
        return self.M - self.k

    def check(self):
        """Raise ``AssertionError`` if an invariant is broken."""
        uniq = np.unique(self.labels)
        assert uniq.size == self.k and uniq[0] == 0 and uniq[-1] == self.k - 1
        assert self.M >= self.k >= 1
        assert self.log_S.shape == (self.M,)
        assert np.all(np.isfinite(self.log_S))


def relabel(labels):
    """Map labels to ``0..k-1`` in order of first appearance.

    Returns ``(new_labels, order)`` where ``order[j]`` is the old label now
    called ``j``.
    """
    labels = np.asarray(labels)
    uniq, first = np.unique(labels, return_index=True)
    order = uniq[np.argsort(first, kind="stable")]
    mapping = np.empty(int(uniq[-1]) + 1, dtype=np.intp)
    mapping[order] = np.arange(order.size)
    return mapping[labels], order


class Trace:
    """Post burn-in draws of one or more chains.

    Scalar series are stored as lists keyed by name; optional fields
    (``labels``, ``weights``, ``taus``) as lists of per-draw records.
    """

    SCALARS = ("M", "k", "M_na", "Lambda", "b_Lambda", "log_u", "shape")

    def __init__(self, meta=None):
        self.meta = dict(meta or {})
        self.data = {name: [] for name in self.SCALARS}
        self.labels = []
        self.weights = []
        self.taus = []
        self.stats = {}

    def __len__(self):
        return len(self.data["M"])

    def array(self, name):
        return np.asarray(self.data[name], dtype=float)

    def ints(self, name):
        return np.asarray(self.data[name], dtype=np.int64)

    def label_matrix(self):
        if not self.labels:
            raise ValueError("trace has no recorded labels")
        return np.asarray(self.labels, dtype=np.intp)

    def append(self, state, prior, record, kernel):
        d = self.data
        d["M"].append(int(state.M))
        d["k"].append(int(state.k))
        d["M_na"].append(int(state.M - state.k))
        d["Lambda"].append(None if state.lam is None else float(state.lam))
        d["b_Lambda"].append(None if state.b_lambda is None else float(state.b_lambda))
        d["log_u"].append(float(state.log_u))
        d["shape"].append(float(state.shape))
        if "labels" in record:
            self.labels.append(state.labels.tolist())
        if "weights" in record:
            lw = state.log_S - np.logaddexp.reduce(state.log_S)
            self.weights.append(np.exp(lw).tolist())
        if "taus" in record:
            self.taus.append(kernel.record_taus())

    def extend(self, other):
        for name in self.SCALARS:
            self.data[name].extend(other.data[name])
        self.labels.extend(other.labels)
        self.weights.extend(other.weights)
        self.taus.extend(other.taus)

    @classmethod
    def merge(cls, traces):
        out = cls(traces[0].meta)
        out.meta["chains"] = len(traces)
        for t in traces:
            out.extend(t)
        out.stats = {"chains": [t.stats for t in traces]}
        return out

    def to_dict(self):
        return {
            "meta": self.meta,
            "stats": self.stats,
            "draws": self.data,
            "labels": self.labels,
            "weights": self.weights,
            "taus": self.taus,
        }

    @classmethod
    def from_dict(cls, obj):
        t = cls(obj.get("meta"))
        t.data.update({k: list(v) for k, v in obj["draws"].items()})
        t.labels = obj.get("labels", [])
        t.weights = obj.get("weights", [])
        t.taus = obj.get("taus", [])
        t.stats = obj.get("stats", {})
        return t

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _log_f_prior(rho, d1, d2):
    return float(stats.f.logpdf(rho, d1, d2))


class Chain:
    """A single Markov chain bound to a kernel, weight model and count prior.

    Parameters
    ----------
    kernel : kernel object
        See :mod:`nigmix.kernels`; owns the component parameters.
    weights : WeightModel
    prior : CountPrior
        Mutated in place (``Lambda``, ``b_lambda``).
    config : SamplerConfig
    rng : numpy.random.Generator
    data : ndarray, optional
        Observations used for the k-means start (iid kernels only).
    """

    def __init__(self, kernel, weights, prior, config, rng, data=None):
        if weights.dynamic and config.algorithm == "blocked_gibbs":
            raise SamplerError("dynamic weight models need the telescoping sampler")
        if config.algorithm == "telescoping" and config.M_max < 1:
            raise SamplerError("M_max must be positive")
        self.kernel = kernel
        self.weights = weights
        self.prior = prior
        self.config = config
        self.rng = rng
        self.data = data
        self.n = kernel.n
        self.state = None
        self._step = "init"
        self.shape_accepted = 0
        self.shape_proposed = 0
        self.truncation_hits = 0

    # -- initial state ----------------------------------------------------

    def _initial_labels(self, groups):
        rng = self.rng
        if groups == 1:
            return np.zeros(self.n, dtype=np.intp)
        if self.data is not None and not isinstance(self.kernel, (NullKernel, StochasticBlockModel)):
            y = np.asarray(self.data, dtype=float)
            y = y.reshape(self.n, -1)
            scale = y.std(axis=0)
            yw = whiten(y) if np.all(scale > 0) else y
            _, labels = kmeans2(yw, groups, minit="++", seed=rng)
            return labels.astype(np.intp)
        return rng.integers(0, groups, size=self.n).astype(np.intp)

    def initialise(self):
        """Default starting state.

        ``M = init_M`` (10 with data, 1 in prior-only mode); allocations from
        k-means++ on whitened data or uniformly at random for networks and
        prior-only runs, with ``min(M, n)`` groups; weights from the prior;
        allocated parameters from their conditionals and empty ones from the
        prior; ``U_n = n / T`` and ``Lambda`` at its prior mean.
        """
        self._step = "init"
        cfg = self.config
        default_M = 1 if isinstance(self.kernel, NullKernel) else 10
        M = max(1, int(cfg.init_M) if cfg.init_M is not None else default_M)
        if cfg.algorithm == "telescoping":
            M = min(M, cfg.M_max)
        labels, _ = relabel(self._initial_labels(min(M, self.n)))
        k = int(labels.max()) + 1
        M = max(M, k)
        log_S = self.weights.sample_prior_log(self.rng, M, m=M)
        self.kernel.initialise(self.rng, labels, M)
        log_T = float(np.logaddexp.reduce(log_S))
        lam = self.prior.initial_lambda() if self.prior.has_lambda else None
        b = self.prior.b_lambda if self.prior.family == "bnb" else None
        self.state = ChainState(
            labels=labels, log_S=log_S, log_u=math.log(self.n) - log_T,
            k=k, M=M, shape=self.weights.shape, lam=lam, b_lambda=b,
        )
        return self.state

    # -- sweep pieces -----------------------------------------------------

    def _sample_u(self):
        st = self.state
        log_T = float(np.logaddexp.reduce(st.log_S))
        st.log_u = float(np.log(self.rng.standard_gamma(self.n))) - log_T

    def _allocate(self):
        st = self.state
        labels = self.kernel.update_labels(self.rng, st.labels, st.log_S)
        labels, order = relabel(labels)
        self.kernel.reorder(order)
        st.labels = labels
        st.log_S = st.log_S[order]
        st.k = int(order.size)
        st.M = st.k
        return np.bincount(labels, minlength=st.k)

    def _shape_target(self, rho, u, sizes, m):
        wm = self.weights.with_shape(rho)
        k = sizes.size
        lp = _log_f_prior(rho, *self.config.shape_prior)
        if self.config.algorithm == "blocked_gibbs":
            return self.prior.log_Psi(k, wm.log_psi(u)) + wm.sum_log_kappa(u, sizes) + lp
        extra = (m - k) * wm.log_psi(u, m) if m > k else 0.0
        return wm.sum_log_kappa(u, sizes, m) + extra + lp

    def _update_shape(self, u, sizes, m):
        rho = self.weights.shape
        prop = rho * math.exp(self.config.shape_step * self.rng.standard_normal())
        log_ratio = (
            self._shape_target(prop, u, sizes, m)
            - self._shape_target(rho, u, sizes, m)
            + math.log(prop) - math.log(rho)
        )
        self.shape_proposed += 1
        if math.log(self.rng.random()) < log_ratio:
            self.weights = self.weights.with_shape(prop)
            self.shape_accepted += 1
        self.state.shape = self.weights.shape

    def _blocked_counts(self, sizes, m_prev):
        st, prior = self.state, self.prior
        u = math.exp(st.log_u)
        self._step = "3: count-prior hyperparameters"
        if prior.learns_lambda:
            prior.sample_lambda(self.rng, st.k, self.weights.log_psi(u))
        if prior.family == "bnb":
            prior.mh_update_b_lambda(self.rng)
        if self.config.learn_shape:
            self._step = "3': weight shape"
            self._update_shape(u, sizes, m_prev)
        self._step = "4: empty components"
        return st.k + prior.sample_M_na(self.rng, st.k, self.weights.log_psi(u))

    def _telescoping_counts(self, sizes, m_prev):
        st, prior = self.state, self.prior
        u = math.exp(st.log_u)
        self._step = "3: count-prior hyperparameters"
        if prior.learns_lambda:
            prior.sample_lambda_given_M(self.rng, m_prev)
        if prior.family == "bnb":
            prior.mh_update_b_lambda(self.rng)
        if self.config.learn_shape:
            self._step = "3': weight shape"
            self._update_shape(u, sizes, m_prev)
        self._step = "4: number of components"
        m_max = self.config.M_max
        if m_max < st.k:
            raise SamplerError(f"M_max={m_max} is below the number of clusters {st.k}")
        M = prior.sample_M_dynamic(self.rng, st.k, sizes, self.weights, u, m_max)
        if M == m_max and m_max > st.k:
            self.truncation_hits += 1
        return M

    def sweep(self):
        st = self.state
        m_prev = st.M
        self._step = "1: latent U"
        self._sample_u()
        self._step = "2: allocations"
        sizes = self._allocate()
        if self.config.algorithm == "blocked_gibbs":
            M = self._blocked_counts(sizes, m_prev)
        else:
            M = self._telescoping_counts(sizes, m_prev)
        k = st.k
        u = math.exp(st.log_u)
        self._step = "5: allocated weights"
        log_alloc = self.weights.sample_log_allocated(self.rng, u, sizes, m=M)
        self._step = "6: allocated parameters"
        self.kernel.sample_posterior(self.rng, st.labels, k)
        self._step = "7: empty weights"
        log_empty = self.weights.sample_log_unallocated(self.rng, u, M - k, m=M)
        self._step = "8: empty parameters"
        self.kernel.extend_prior(self.rng, M - k)
        st.log_S = np.concatenate([log_alloc, log_empty])
        st.M = M
        self._step = "kernel hyperparameters"
        self.kernel.update_hypers(self.rng)
        if self.prior.has_lambda:
            st.lam = self.prior.lam
        if self.prior.family == "bnb":
            st.b_lambda = self.prior.b_lambda

    def run(self, callback=None):
        """Run the configured number of iterations and return a :class:`Trace`."""
        cfg = self.config
        if self.state is None:
            self.initialise()
        trace = Trace(
            {
                "algorithm": cfg.algorithm,
                "iters": cfg.iters,
                "burnin": cfg.burnin,
                "thin": cfg.thin,
                "n": self.n,
                "weight_family": self.weights.family,
                "dynamic": self.weights.dynamic,
                "count_prior": self.prior.family,
                "a_lambda": self.prior.a_lambda,
                "b_lambda": self.prior.b_lambda if self.prior.family != "bnb" else None,
            }
        )
        for t in range(1, cfg.iters + 1):
            try:
                self.sweep()
            except SamplerError:
                raise
            except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
                raise SamplerError(f"iteration {t}, step {self._step}: {exc}") from exc
            if t > cfg.burnin and (t - cfg.burnin) % cfg.thin == 0:
                trace.append(self.state, self.prior, cfg.record, self.kernel)
            if callback is not None:
                callback(t, self)
        trace.stats = {
            "shape_acceptance": self.shape_accepted / self.shape_proposed if self.shape_proposed else None,
            "b_lambda_acceptance": (
                self.prior.mh_accepted / self.prior.mh_proposed if self.prior.mh_proposed else None
            ),
            "M_max_hits": self.truncation_hits,
        }
        return trace


def run_chain(kernel, weights, prior, config, rng, data=None):
    """Initialise and run one chain."""
    return Chain(kernel, weights, prior, config, rng, data=data).run()


def run_blocked_gibbs(kernel, weights, prior, config, rng, data=None):
    if config.algorithm != "blocked_gibbs":
        config = SamplerConfig(**{**asdict(config), "algorithm": "blocked_gibbs"})
    return run_chain(kernel, weights, prior, config, rng, data=data)


def run_telescoping(kernel, weights, prior, config, rng, data=None):
    if config.algorithm != "telescoping":
        config = SamplerConfig(**{**asdict(config), "algorithm": "telescoping"})
    return run_chain(kernel, weights, prior, config, rng, data=data)
