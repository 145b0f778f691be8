"""Mixtures of finite mixtures with normalised inverse Gaussian or gamma weights.

The main entry points are :class:`Chain` (or :func:`run_blocked_gibbs` and
:func:`run_telescoping`) together with a kernel from :mod:`nigmix.kernels`,
a :class:`WeightModel` and a :class:`CountPrior`; :mod:`nigmix.summaries`
post-processes the resulting :class:`Trace`.
"""

from . import _core, summaries, variates
from .count_priors import CountPrior, SeriesError, TruncationWarning, prop31_bounds
from .kernels import MultivariateNormal, NullKernel, StochasticBlockModel, UnivariateNormal
from .sampler import Chain, SamplerConfig, SamplerError, Trace, run_blocked_gibbs, run_chain, run_telescoping
from .weights import WeightModel, log_nigau_density

__version__ = "0.1.0"

__all__ = [
    "CountPrior",
    "SeriesError",
    "TruncationWarning",
    "prop31_bounds",
    "MultivariateNormal",
    "NullKernel",
    "StochasticBlockModel",
    "UnivariateNormal",
    "Chain",
    "SamplerConfig",
    "SamplerError",
    "Trace",
    "run_blocked_gibbs",
    "run_chain",
    "run_telescoping",
    "WeightModel",
    "log_nigau_density",
    "summaries",
    "variates",
    "backend",
]


def backend():
    """Name of the active hot-loop backend (``"compiled"`` or ``"python"``)."""
    return _core.backend()
