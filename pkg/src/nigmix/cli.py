"""Command line entry point.

Subcommands::

    nigmix fit --config run.ini [--seed S] [--out DIR] [--threads T]
    nigmix summarize TRACE --out DIR
    nigmix gini-match --alpha A --dim D
    nigmix bounds TRACE [--out FILE]

``fit`` writes ``trace.json``, ``tables.csv``, ``coclust.csv``,
``map_partition.json``, ``density.csv`` (density mode), ``modularity.txt``
(sbm mode) and ``manifest.ini``.  Rerunning ``fit`` on the manifest
reproduces every file byte for byte.
"""

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import summaries
from .config import ConfigError, load_config
from .count_priors import prop31_bounds
from .io import DataError, fmt, load_adjacency, write_json, write_matrix_csv
from .sampler import Chain, SamplerError, Trace
from .variates import spawn_rngs
from .weights import WeightModel

__all__ = ["main", "fit", "summarize", "bounds_table"]


class StepError(RuntimeError):
    """Failure tagged with the pipeline step that raised it."""


def _run_chain(cfg, index):
    rng = spawn_rngs(cfg.seed, cfg.chains)[index]
    data = cfg.load_data()
    kernel = cfg.build_kernel(data)
    chain = Chain(
        kernel, cfg.weight_model(), cfg.count_prior(), cfg.sampler_config(), rng,
        data=None if cfg.mode == "sbm" else data,
    )
    return chain.run()


def _trace_meta(cfg, data):
    meta = {
        "mode": cfg.mode,
        "data_path": os.path.abspath(cfg.data_path),
        "seed": cfg.seed,
        "shape": float(cfg.shape),
        "prior_only": cfg.prior_only,
    }
    if cfg.mode == "sbm":
        meta["adjacency_format"] = cfg.adjacency_format
        meta["n_nodes"] = int(data.shape[0])
    elif cfg.mode == "density":
        meta["data_min"] = float(np.min(data))
        meta["data_max"] = float(np.max(data))
    return meta


def fit(cfg, out_dir, threads=1):
    """Run all chains of ``cfg``, write the outputs to ``out_dir``, return the trace."""
    try:
        data = cfg.load_data()
    except (OSError, DataError) as exc:
        raise StepError(f"load data: {exc}") from exc
    try:
        cfg.build_kernel(data)
    except ValueError as exc:
        raise StepError(f"build kernel: {exc}") from exc
    indices = range(cfg.chains)
    try:
        if threads > 1 and cfg.chains > 1:
            with ProcessPoolExecutor(max_workers=min(threads, cfg.chains)) as pool:
                traces = list(pool.map(_run_chain, [cfg] * cfg.chains, indices))
        else:
            traces = [_run_chain(cfg, i) for i in indices]
    except SamplerError as exc:
        raise StepError(f"sampler: {exc}") from exc
    trace = Trace.merge(traces)
    trace.meta.update(_trace_meta(cfg, data))
    os.makedirs(out_dir, exist_ok=True)
    trace.dump(os.path.join(out_dir, "trace.json"))
    with open(os.path.join(out_dir, "manifest.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    summarize(trace, out_dir, adjacency=data if cfg.mode == "sbm" else None)
    return trace


def _write_tables(path, tables):
    lines = ["variable,statistic,value"]
    for name in ("M", "k", "M_na"):
        s = tables[name]
        for key in ("mode", "q1", "q3"):
            lines.append(f"{name},{key},{s[key]}")
        lines.append(f"{name},mean,{fmt(s['mean'])}")
        for value, p in sorted(s["pmf"].items()):
            lines.append(f"{name},pmf_{value},{fmt(p)}")
    lines.append(f"M_na,P_zero,{fmt(tables['P_M_na_0'])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summarize(trace, out_dir, adjacency=None):
    """Write every summary derivable from ``trace`` into ``out_dir``."""
    if len(trace) == 0:
        raise StepError("summarize: empty trace")
    meta = trace.meta
    try:
        tables = summaries.posterior_tables(trace.ints("M"), trace.ints("k"), trace.ints("M_na"))
    except ValueError as exc:
        raise StepError(f"posterior tables: {exc}") from exc
    _write_tables(os.path.join(out_dir, "tables.csv"), tables)
    out = {"tables": tables}
    if trace.labels:
        L = trace.label_matrix()
        P = summaries.coclustering(L)
        write_matrix_csv(os.path.join(out_dir, "coclust.csv"), P)
        labels, draw = summaries.dahl_map(L, P)
        write_json(
            os.path.join(out_dir, "map_partition.json"),
            {"labels": labels.tolist(), "draw": draw, "k": int(labels.max())},
        )
        out["map"] = labels
        if meta.get("mode") == "sbm":
            if adjacency is None:
                try:
                    adjacency = load_adjacency(
                        meta["data_path"], fmt=meta.get("adjacency_format", "edges"),
                        n_nodes=meta.get("n_nodes"),
                    )
                except (OSError, DataError) as exc:
                    raise StepError(f"modularity: {exc}") from exc
            q = summaries.modularity(adjacency, labels)
            with open(os.path.join(out_dir, "modularity.txt"), "w") as fh:
                fh.write(fmt(q) + "\n")
            out["modularity"] = q
    if meta.get("mode") == "density" and trace.weights and trace.taus and "mu" in trace.taus[0]:
        lo, hi = meta["data_min"], meta["data_max"]
        grid = summaries.default_grid(np.array([lo, hi]))
        dens = summaries.density_grid(trace.weights, trace.taus, grid)
        with open(os.path.join(out_dir, "density.csv"), "w") as fh:
            fh.write("x,density\n")
            for x, f in zip(grid, dens):
                fh.write(f"{fmt(x)},{fmt(f)}\n")
        out["density"] = (grid, dens)
    return out


def bounds_table(trace):
    """Per-draw upper bounds on ``P(M_na >= 1 | u, k, Lambda)`` for a Poisson prior.

    Returns a dict of arrays: ``k``, ``Lambda``, ``log_psi``, ``conditional``
    and ``marginal`` (``nan`` when Lambda has no Gamma hyperprior).
    """
    meta = trace.meta
    if meta.get("count_prior") != "poisson":
        raise ValueError("bounds are defined for the Poisson count prior only")
    if meta.get("dynamic"):
        raise ValueError("bounds are defined for static weight models only")
    family = meta["weight_family"]
    k = trace.ints("k")
    lam = trace.array("Lambda")
    shape = trace.array("shape")
    log_u = trace.array("log_u")
    a, b = meta.get("a_lambda"), meta.get("b_lambda")
    out = {name: np.empty(len(trace)) for name in ("log_psi", "conditional", "marginal")}
    for d in range(len(trace)):
        lp = float(WeightModel(family, float(shape[d])).log_psi(math.exp(log_u[d])))
        c, m = prop31_bounds(lp, int(k[d]), float(lam[d]), a, b)
        out["log_psi"][d] = lp
        out["conditional"][d] = c
        out["marginal"][d] = m
    out["k"] = k
    out["Lambda"] = lam
    return out


def _cmd_fit(args):
    overrides = {"seed": args.seed}
    cfg = load_config(args.config, overrides)
    out_dir = args.out or cfg.out_dir
    if not out_dir:
        raise ConfigError("no output directory: pass --out or set [output] dir")
    t0 = time.perf_counter()
    trace = fit(cfg, out_dir, threads=args.threads)
    print(f"fit: {len(trace)} draws from {cfg.chains} chain(s) in {time.perf_counter() - t0:.1f} s -> {out_dir}")
    return 0


def _cmd_summarize(args):
    try:
        trace = Trace.load(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        raise StepError(f"load trace: {exc}") from exc
    os.makedirs(args.out, exist_ok=True)
    out = summarize(trace, args.out)
    t = out["tables"]
    print(f"mode k = {t['k']['mode']}, mode M = {t['M']['mode']}, P(M_na=0) = {t['P_M_na_0']:.4f}")
    return 0


def _cmd_gini(args):
    g = summaries.gini_match(args.alpha, args.dim)
    print(fmt(g))
    return 0


def _cmd_bounds(args):
    try:
        trace = Trace.load(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        raise StepError(f"load trace: {exc}") from exc
    try:
        tab = bounds_table(trace)
    except ValueError as exc:
        raise StepError(f"bounds: {exc}") from exc
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("draw,k,Lambda,log_psi,conditional,marginal\n")
            for d in range(len(tab["k"])):
                fh.write(
                    f"{d},{tab['k'][d]},{fmt(tab['Lambda'][d])},{fmt(tab['log_psi'][d])},"
                    f"{fmt(tab['conditional'][d])},{fmt(tab['marginal'][d])}\n"
                )
    freq = float(np.mean(trace.ints("M_na") >= 1))
    print(f"draws {len(tab['k'])}: mean conditional bound {np.mean(tab['conditional']):.4g}, "
          f"max {np.max(tab['conditional']):.4g}; empirical P(M_na>=1) {freq:.4g}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="nigmix", description="Mixtures of finite mixtures by MCMC.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="run the sampler described by a config file")
    f.add_argument("--config", required=True, help="INI run configuration")
    f.add_argument("--seed", type=int, default=None, help="override [sampler] seed")
    f.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    f.add_argument("--threads", type=int, default=1, help="worker processes for chains")
    f.set_defaults(func=_cmd_fit)

    s = sub.add_parser("summarize", help="recompute summaries from a saved trace")
    s.add_argument("trace")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_summarize)

    g = sub.add_parser("gini-match", help="Dirichlet shape with the same expected Gini index")
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--dim", type=int, required=True)
    g.set_defaults(func=_cmd_gini)

    b = sub.add_parser("bounds", help="per-draw bounds on P(M_na >= 1) over a saved trace")
    b.add_argument("trace")
    b.add_argument("--out", default=None, help="CSV file for the per-draw table")
    b.set_defaults(func=_cmd_bounds)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
    except StepError as exc:
        print(f"error [{exc}]", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
