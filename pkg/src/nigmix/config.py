"""Run configuration: INI parsing, validation and model construction.

A configuration file has the sections ``[data]``, ``[kernel]``,
``[weights]``, ``[prior]``, ``[sampler]`` and optionally ``[output]``::

    [data]
    mode = density            ; cluster | density | sbm
    path = galaxy.csv
    [kernel]
    type = univariate         ; univariate | multivariate | sbm (default from mode)
    [weights]
    family = igau
    shape = 1.0
    [prior]
    family = poisson
    a_lambda = 1
    b_lambda = 0.2
    [sampler]
    algorithm = blocked_gibbs
    iters = 100000
    burnin = 90000
    seed = 1

Unknown keys are rejected so typos do not pass silently.
"""

import configparser
import os
from dataclasses import dataclass, field

from .count_priors import CountPrior
from .io import load_adjacency, load_observations
from .kernels import MultivariateNormal, NullKernel, StochasticBlockModel, UnivariateNormal
from .sampler import SamplerConfig
from .weights import WeightModel

__all__ = ["ConfigError", "RunConfig", "load_config", "bundled_data_path"]

MODES = ("cluster", "density", "sbm")
_KERNEL_FOR_MODE = {"density": "univariate", "sbm": "sbm"}
_KERNEL_KEYS = {
    "univariate": ("m0", "d0", "D0", "c0", "w", "W", "C0", "eta", "learn_hypers"),
    "multivariate": ("c0", "g0", "learn_hypers"),
    "sbm": ("a_q", "b_q"),
}
_SECTION_KEYS = {
    "data": ("mode", "path", "header", "columns", "adjacency_format", "n_nodes"),
    "kernel": ("type",) + tuple(sorted({k for v in _KERNEL_KEYS.values() for k in v})),
    "weights": ("family", "shape", "dynamic", "learn_shape", "shape_prior", "shape_step"),
    "prior": ("family", "lambda", "a_lambda", "b_lambda", "a_p", "b_p", "p", "mh_step"),
    "sampler": (
        "algorithm", "iters", "burnin", "thin", "chains", "seed", "M_max",
        "init_M", "record", "prior_only",
    ),
    "output": ("dir",),
}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def bundled_data_path(name):
    """Path of a dataset shipped with the package (``galaxy``, ``thyroid``)."""
    return os.path.join(os.path.dirname(__file__), "data", f"{name}.csv")


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _list(s):
    return [x.strip() for x in str(s).replace(";", ",").split(",") if x.strip()]


@dataclass
class RunConfig:
    """Fully resolved settings for one run (all chains)."""

    mode: str = "cluster"
    data_path: str = None
    header: object = None
    columns: list = None
    adjacency_format: str = "edges"
    n_nodes: int = None
    kernel: str = None
    kernel_args: dict = field(default_factory=dict)
    weight_family: str = "igau"
    shape: float = 1.0
    dynamic: bool = False
    learn_shape: bool = False
    shape_prior: tuple = (6.0, 3.0)
    shape_step: float = 0.3
    prior_family: str = "poisson"
    prior_args: dict = field(default_factory=dict)
    algorithm: str = "blocked_gibbs"
    iters: int = 2000
    burnin: int = 1000
    thin: int = 1
    chains: int = 1
    seed: int = 0
    M_max: int = 100
    init_M: int = None
    record: tuple = ("labels",)
    prior_only: bool = False
    out_dir: str = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.kernel is None:
            self.kernel = _KERNEL_FOR_MODE.get(self.mode, "multivariate")
        if self.kernel not in _KERNEL_KEYS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.mode == "sbm" and self.kernel != "sbm":
            raise ConfigError("sbm mode needs the sbm kernel")
        if self.mode == "density" and self.kernel != "univariate":
            raise ConfigError("density mode needs the univariate kernel")
        if self.mode != "sbm" and self.kernel == "sbm":
            raise ConfigError("the sbm kernel is only available in sbm mode")
        if not self.data_path:
            what = "adjacency" if self.mode == "sbm" else "data"
            raise ConfigError(f"[data] path is required ({what} input missing)")
        bad = set(self.kernel_args) - set(_KERNEL_KEYS[self.kernel])
        if bad:
            raise ConfigError(f"kernel {self.kernel!r} does not take {sorted(bad)}")
        if self.chains < 1:
            raise ConfigError("chains must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.mode == "density":
            self.record = tuple(dict.fromkeys(tuple(self.record) + ("weights", "taus")))
        try:
            self.sampler_config()
            self.weight_model()
            self.count_prior()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- builders ---------------------------------------------------------

    def sampler_config(self):
        return SamplerConfig(
            algorithm=self.algorithm, iters=self.iters, burnin=self.burnin, thin=self.thin,
            M_max=self.M_max, init_M=self.init_M, learn_shape=self.learn_shape,
            shape_prior=tuple(self.shape_prior), shape_step=self.shape_step, record=self.record,
        )

    def weight_model(self):
        return WeightModel(self.weight_family, float(self.shape), bool(self.dynamic))

    def count_prior(self):
        args = dict(self.prior_args)
        if "lambda" in args:
            args["lam"] = args.pop("lambda")
        if "p" in args:
            args["geo_p"] = args.pop("p")
        return CountPrior(self.prior_family, **args)

    def load_data(self):
        if self.mode == "sbm":
            return load_adjacency(self.data_path, fmt=self.adjacency_format, n_nodes=self.n_nodes)
        y = load_observations(self.data_path, header=self.header, columns=self.columns)
        if self.kernel == "univariate":
            if y.shape[1] != 1:
                raise ConfigError(f"univariate kernel needs one column, data has {y.shape[1]}")
            return y[:, 0]
        return y

    def build_kernel(self, data):
        if self.prior_only:
            return NullKernel(data.shape[0])
        if self.kernel == "univariate":
            return UnivariateNormal(data, **self.kernel_args)
        if self.kernel == "multivariate":
            return MultivariateNormal(data, **self.kernel_args)
        return StochasticBlockModel(data, **self.kernel_args)

    # -- INI round trip ---------------------------------------------------

    def to_ini(self):
        """Resolved configuration as INI text (the run manifest)."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        data = {"mode": self.mode, "path": os.path.abspath(self.data_path)}
        if self.header is not None:
            data["header"] = str(bool(self.header)).lower()
        if self.columns:
            data["columns"] = ",".join(str(c) for c in self.columns)
        if self.mode == "sbm":
            data["adjacency_format"] = self.adjacency_format
            if self.n_nodes is not None:
                data["n_nodes"] = str(self.n_nodes)
        cp["data"] = data
        kern = {"type": self.kernel}
        kern.update({k: repr(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else str(v)
                     for k, v in sorted(self.kernel_args.items())})
        cp["kernel"] = kern
        cp["weights"] = {
            "family": self.weight_family,
            "shape": repr(float(self.shape)),
            "dynamic": str(bool(self.dynamic)).lower(),
            "learn_shape": str(bool(self.learn_shape)).lower(),
            "shape_prior": ",".join(repr(float(x)) for x in self.shape_prior),
            "shape_step": repr(float(self.shape_step)),
        }
        prior = {"family": self.prior_family}
        prior.update({k: repr(float(v)) for k, v in sorted(self.prior_args.items())})
        cp["prior"] = prior
        sampler = {
            "algorithm": self.algorithm,
            "iters": str(self.iters),
            "burnin": str(self.burnin),
            "thin": str(self.thin),
            "chains": str(self.chains),
            "seed": str(self.seed),
            "M_max": str(self.M_max),
            "record": ",".join(self.record),
            "prior_only": str(bool(self.prior_only)).lower(),
        }
        if self.init_M is not None:
            sampler["init_M"] = str(self.init_M)
        cp["sampler"] = sampler
        lines = []
        for name in cp.sections():
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {v}" for k, v in cp[name].items())
            lines.append("")
        return "\n".join(lines)


def _parse_float(section, key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {value!r}") from None


def _parse_int(section, key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {value!r}") from None


def load_config(path, overrides=None):
    """Parse an INI file into a :class:`RunConfig`.

    Relative data paths are resolved against the directory of the file.
    ``overrides`` (e.g. from the command line) replace fields afterwards.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        bad = set(cp[section]) - set(_SECTION_KEYS[section])
        if bad:
            raise ConfigError(f"{path}: unknown keys in [{section}]: {sorted(bad)}")
    get = lambda s, k, d=None: cp.get(s, k, fallback=d)  # noqa: E731
    kw = {}
    kw["mode"] = get("data", "mode", "cluster")
    data_path = get("data", "path")
    if data_path:
        if not os.path.isabs(data_path):
            data_path = os.path.join(os.path.dirname(os.path.abspath(path)), data_path)
        kw["data_path"] = data_path
    if get("data", "header") is not None:
        h = get("data", "header")
        kw["header"] = None if h.strip().lower() == "auto" else _bool(h)
    if get("data", "columns"):
        kw["columns"] = _list(get("data", "columns"))
    kw["adjacency_format"] = get("data", "adjacency_format", "edges")
    if get("data", "n_nodes"):
        kw["n_nodes"] = _parse_int("data", "n_nodes", get("data", "n_nodes"))

    kw["kernel"] = get("kernel", "type")
    kargs = {}
    if cp.has_section("kernel"):
        for key, value in cp["kernel"].items():
            if key == "type":
                continue
            kargs[key] = _bool(value) if key == "learn_hypers" else _parse_float("kernel", key, value)
    kw["kernel_args"] = kargs

    kw["weight_family"] = get("weights", "family", "igau")
    kw["shape"] = _parse_float("weights", "shape", get("weights", "shape", "1.0"))
    kw["dynamic"] = _bool(get("weights", "dynamic", "false"))
    kw["learn_shape"] = _bool(get("weights", "learn_shape", "false"))
    if get("weights", "shape_prior"):
        kw["shape_prior"] = tuple(_parse_float("weights", "shape_prior", x) for x in _list(get("weights", "shape_prior")))
    kw["shape_step"] = _parse_float("weights", "shape_step", get("weights", "shape_step", "0.3"))

    kw["prior_family"] = get("prior", "family", "poisson")
    pargs = {}
    if cp.has_section("prior"):
        for key, value in cp["prior"].items():
            if key != "family":
                pargs[key] = _parse_float("prior", key, value)
    kw["prior_args"] = pargs

    s = "sampler"
    kw["algorithm"] = get(s, "algorithm", "blocked_gibbs")
    for key, default in (("iters", "2000"), ("burnin", "1000"), ("thin", "1"), ("chains", "1"),
                         ("seed", "0"), ("M_max", "100")):
        kw[key] = _parse_int(s, key, get(s, key, default))
    if get(s, "init_M"):
        kw["init_M"] = _parse_int(s, "init_M", get(s, "init_M"))
    if get(s, "record"):
        kw["record"] = tuple(_list(get(s, "record")))
    kw["prior_only"] = _bool(get(s, "prior_only", "false"))
    if get("output", "dir"):
        kw["out_dir"] = get("output", "dir")
    kw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**kw)

