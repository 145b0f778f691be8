"""Compiled core vs pure-Python fallback.

Times the hot kernels and two end-to-end chains under both backends and
prints one row per case with the speed-up.  Both backends consume the
random stream identically, so the chains produce the same draws.

    python3 benchmarks/bench_core.py [--repeat 3] [--iters 500]
"""

import argparse
import time

import numpy as np

from nigmix import _core
from nigmix.config import bundled_data_path
from nigmix.count_priors import CountPrior
from nigmix.io import load_observations
from nigmix.kernels import StochasticBlockModel, UnivariateNormal
from nigmix.sampler import SamplerConfig, run_chain
from nigmix.variates import make_rng
from nigmix.weights import WeightModel


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _planted_graph(n, seed):
    rng = make_rng(seed)
    z = np.repeat([0, 1], n // 2)
    P = np.where(z[:, None] == z[None, :], 0.35, 0.1)
    A = np.triu(rng.random((n, n)) < P, 1).astype(np.int64)
    return A + A.T


def cases(iters):
    y = load_observations(bundled_data_path("galaxy"))[:, 0]
    A = _planted_graph(100, 1)
    lam = np.full(20_000, 0.5)
    omega = np.full(20_000, 2.0)
    logw = np.log(make_rng(2).random((5_000, 8)))
    u = make_rng(3).random(5_000)
    z = np.linspace(0.01, 50.0, 2_000)

    def galaxy():
        cfg = SamplerConfig(iters=iters, burnin=0, record=())
        run_chain(UnivariateNormal(y), WeightModel("igau", 1.0), CountPrior("poisson", a_lambda=1.0, b_lambda=0.2),
                  cfg, make_rng(4), data=y)

    def sbm():
        cfg = SamplerConfig(iters=iters, burnin=0, record=())
        run_chain(StochasticBlockModel(A), WeightModel("igau", 1.0), CountPrior("poisson", lam=1.0),
                  cfg, make_rng(5))

    return [
        ("gig_fill (20k draws)", lambda: _core.gig_fill(make_rng(6), lam, omega)),
        ("categorical_from_log (5k x 8)", lambda: _core.categorical_from_log(logw, u)),
        ("log_bessel_half_table (2k x 30)", lambda: _core.log_bessel_half_table(z, 30)),
        (f"galaxy blocked Gibbs ({iters} sweeps)", galaxy),
        (f"SBM n=100 blocked Gibbs ({iters} sweeps)", sbm),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3, help="best of this many runs")
    p.add_argument("--iters", type=int, default=500, help="sweeps in the end-to-end cases")
    args = p.parse_args(argv)
    if "compiled" not in _core.available_backends():
        raise SystemExit("compiled core is not built; run pip install -e . --no-build-isolation")
    before = _core.backend()
    print(f"{'case':42s} {'python s':>10s} {'compiled s':>11s} {'speed-up':>9s}")
    try:
        for name, fn in cases(args.iters):
            res = {}
            for backend in ("python", "compiled"):
                _core.set_backend(backend)
                fn()  # warm caches
                res[backend] = _best(fn, args.repeat)
            print(f"{name:42s} {res['python']:10.4f} {res['compiled']:11.4f} {res['python'] / res['compiled']:8.1f}x")
    finally:
        _core.set_backend(before)


if __name__ == "__main__":
    main()
