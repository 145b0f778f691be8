"""Hot kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built and imports cleanly;
otherwise the fallback in ``_pykernels`` is selected.  Setting the
environment variable ``NIGMIX_PURE_PYTHON=1`` before import forces the
fallback.  :func:`set_backend` switches at runtime (benchmarks, tests).
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = [
    "available_backends",
    "backend",
    "set_backend",
    "gig_fill",
    "categorical_from_log",
    "sbm_sweep",
    "log_bessel_half_table",
]

_impl = _pykernels
if _ckernels is not None and os.environ.get("NIGMIX_PURE_PYTHON", "") != "1":
    _impl = _ckernels


def available_backends():
    return ["python"] + (["compiled"] if _ckernels is not None else [])


def backend():
    """Name of the active backend, ``"compiled"`` or ``"python"``."""
    return "compiled" if _impl is _ckernels and _ckernels is not None else "python"


def set_backend(name):
    global _impl
    if name == "python":
        _impl = _pykernels
    elif name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _impl = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def gig_fill(rng, lam, omega):
    return _impl.gig_fill(rng, lam, omega)


def categorical_from_log(logw, uniforms):
    return _impl.categorical_from_log(logw, uniforms)


def sbm_sweep(indptr, indices, labels, nbr_counts, sizes, logq, log1mq, log_s, uniforms):
    return _impl.sbm_sweep(indptr, indices, labels, nbr_counts, sizes, logq, log1mq, log_s, uniforms)


def log_bessel_half_table(z, n_max):
    return _impl.log_bessel_half_table(z, int(n_max))
