"""Experiment configuration: TOML file, defaults and validation."""

from __future__ import annotations

import copy
import itertools
import math
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from ..errors import ConfigError
from ..families import GlmFamily
from ..priors import KINDS as PRIOR_KINDS
from ..priors import Prior

DEFAULT_CONFIG = """\
# glmcmc experiment configuration (TOML)

seeds = [0, 1]                 # one replicate per seed
out = "out"                    # output directory
threads = 1                    # worker processes
allow_underdetermined = false  # permit n < d

[model]
family = "logistic"        # linear | logistic | poisson
sigma = 1.0                # noise sd (linear only)
clip_radius = inf          # Poisson clipping radius; inf = unclipped
prior = "gaussian"         # flat | gaussian | zellner | student_t | student_t_indep
prior_precision = 1.0      # Q = prior_precision * I (gaussian, student_t, student_t_indep)
prior_scale = 0.0          # multiplier of X'X for zellner/student_t; 0 = 3d/(n pi^2)
nu = 3.0                   # Student-t degrees of freedom
design_cov = "identity"    # identity | positive number (scaled identity) | path to Cholesky factor
theta_star = "unit"        # zero | unit | path to a text vector
theta_norm = 1.0           # |theta*| for "unit"

[grid]
n = [50]
d = [2]
eps = [0.1]
delta = [0.1]

[sampler]
kind = "hmc"               # hmc | gibbs | poisson_gibbs
u = 1                      # HMC integrator: 0 Verlet, 1 randomized midpoint
max_iterations = 200       # cap on the iterations actually run
inner_steps = 64           # HMC steps per iteration K, with T + h fixed; 0 = theory value
thin = 1                   # trace thinning
trace = false              # write traces/<cell>_<seed>.csv
reference = false          # compare against a 10x longer reference run, thinned by 10

[theory]
c_star = 1.0               # bound on |theta*|^2 lam_max and C_pi / lam_max
poisson_c = 1.0            # calibration constant of the Poisson schedule

[sweep]
kinds = ["hmc_n", "hmc_eps"]   # gibbs_d | hmc_n | hmc_eps; each needs >= 4 grid values
n_per_d = 40               # gibbs_d: n = n_per_d * d for each d in grid.d
chains = 4000              # gibbs_d: ensemble size
ks_threshold = 0.05        # gibbs_d: max marginal KS that counts as converged
reference_per_d = 4        # gibbs_d: reference ensemble runs reference_per_d * d iterations
max_iterations_per_d = 200 # gibbs_d: give up after this many iterations per dimension

[verify]
checks = ["map_radius", "smoothness", "local_curvature", "score", "condition_number"]
# also available: "tail_bound", "clip_continuity", "contraction"
probes = 64
"""

FAMILIES = ("linear", "logistic", "poisson")
SAMPLERS = ("hmc", "gibbs", "poisson_gibbs")
SWEEPS = ("gibbs_d", "hmc_n", "hmc_eps")
CHECKS = ("map_radius", "smoothness", "local_curvature", "score", "condition_number",
          "tail_bound", "clip_continuity", "contraction")


def default_config() -> dict:
    return tomllib.loads(DEFAULT_CONFIG)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class Cell:
    n: int
    d: int
    eps: float
    delta: float

    @property
    def key(self) -> str:
        return f"n{self.n}_d{self.d}_e{self.eps:g}_dl{self.delta:g}"


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, updated by the TOML file at ``path`` and then by ``overrides``; validated."""
    cfg = default_config()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                cfg = _merge(cfg, tomllib.load(fh))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    if overrides:
        cfg = _merge(cfg, overrides)
    validate(cfg)
    return cfg


def _positive(x, name):
    if not isinstance(x, (int, float)) or isinstance(x, bool) or not x > 0:
        raise ConfigError(f"{name} must be a positive number, got {x!r}")


def validate(cfg: dict) -> None:
    """Raise :class:`ConfigError` on unknown keys, wrong types or out-of-range values."""
    base = default_config()
    extra = set(cfg) - set(base)
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    for sec, keys in base.items():
        if isinstance(keys, dict):
            if not isinstance(cfg[sec], dict):
                raise ConfigError(f"[{sec}] must be a table")
            extra = set(cfg[sec]) - set(keys)
            if extra:
                raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
    try:
        _validate_values(cfg)
    except (TypeError, KeyError) as e:
        raise ConfigError(f"malformed config value: {e}") from e


def _validate_values(cfg: dict) -> None:
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and 0 <= s < 2**64 for s in seeds):
        raise ConfigError("seeds must be a nonempty list of unsigned 64-bit integers")
    if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
        raise ConfigError("threads must be a positive integer")
    m = cfg["model"]
    if m["family"] not in FAMILIES:
        raise ConfigError(f"model.family must be one of {FAMILIES}")
    if m["prior"] not in PRIOR_KINDS:
        raise ConfigError(f"model.prior must be one of {PRIOR_KINDS}")
    _positive(m["sigma"], "model.sigma")
    _positive(m["clip_radius"], "model.clip_radius")
    _positive(m["nu"], "model.nu")
    if m["prior_precision"] < 0 or m["prior_scale"] < 0:
        raise ConfigError("prior precision and scale must be nonnegative")
    g = cfg["grid"]
    for key in ("n", "d", "eps", "delta"):
        if not isinstance(g.get(key), list) or not g[key]:
            raise ConfigError(f"grid.{key} must be a nonempty list")
    for n in g["n"]:
        if not isinstance(n, int) or n < 1:
            raise ConfigError("grid.n entries must be positive integers")
    for d in g["d"]:
        if not isinstance(d, int) or d < 1:
            raise ConfigError("grid.d entries must be positive integers")
    for e in g["eps"] + g["delta"]:
        if not (isinstance(e, (int, float)) and 0 < e < 1):
            raise ConfigError("grid.eps and grid.delta entries must lie in (0, 1)")
    if not cfg["allow_underdetermined"]:
        bad = [(n, d) for n in g["n"] for d in g["d"] if n < d]
        if bad:
            raise ConfigError(f"grid has n < d at {bad}; pass --allow-underdetermined to permit this")
    s = cfg["sampler"]
    if s["kind"] not in SAMPLERS:
        raise ConfigError(f"sampler.kind must be one of {SAMPLERS}")
    if s["u"] not in (0, 1):
        raise ConfigError("sampler.u must be 0 or 1")
    if not isinstance(s["max_iterations"], int) or s["max_iterations"] < 1:
        raise ConfigError("sampler.max_iterations must be a positive integer")
    if not isinstance(s["inner_steps"], int) or s["inner_steps"] < 0 or s["inner_steps"] == 1:
        raise ConfigError("sampler.inner_steps must be 0 or an integer >= 2")
    if not isinstance(s["thin"], int) or s["thin"] < 1:
        raise ConfigError("sampler.thin must be a positive integer")
    t = cfg["theory"]
    if t["c_star"] < 0:
        raise ConfigError("theory.c_star must be nonnegative")
    if t["poisson_c"] < 1:
        raise ConfigError("theory.poisson_c must be at least 1")
    w = cfg["sweep"]
    bad = set(w["kinds"]) - set(SWEEPS)
    if bad:
        raise ConfigError(f"unknown sweep kinds {sorted(bad)}")
    for key in ("n_per_d", "chains", "reference_per_d", "max_iterations_per_d"):
        if not isinstance(w[key], int) or w[key] < 1:
            raise ConfigError(f"sweep.{key} must be a positive integer")
    if not 0 < w["ks_threshold"] < 1:
        raise ConfigError("sweep.ks_threshold must lie in (0, 1)")
    unknown = set(cfg["verify"]["checks"]) - set(CHECKS)
    if unknown:
        raise ConfigError(f"unknown verify checks {sorted(unknown)}")


def cells(cfg: dict) -> list[Cell]:
    g = cfg["grid"]
    return [Cell(n, d, float(e), float(dl)) for n, d, e, dl in itertools.product(g["n"], g["d"], g["eps"], g["delta"])]


def build_family(cfg: dict) -> GlmFamily:
    m = cfg["model"]
    if m["family"] == "linear":
        return GlmFamily.linear(float(m["sigma"]))
    if m["family"] == "logistic":
        return GlmFamily.logistic()
    return GlmFamily.poisson(float(m["clip_radius"]))


def build_prior(cfg: dict, d: int) -> Prior:
    m = cfg["model"]
    kind = m["prior"]
    prec = float(m["prior_precision"])
    scale = float(m["prior_scale"]) or None
    if kind == "flat":
        return Prior.flat()
    if kind == "gaussian":
        return Prior.isotropic(prec, d)
    if kind == "zellner":
        return Prior.zellner(scale)
    if kind == "student_t":
        if scale is not None:
            return Prior.student_t(float(m["nu"]), scale=scale)
        if prec <= 0:
            raise ConfigError("student_t needs prior_precision > 0 or prior_scale > 0")
        return Prior.student_t(float(m["nu"]), Q=prec * np.eye(d))
    return Prior.student_t_indep(float(m["nu"]), np.full(d, prec))


def echo(cfg: dict) -> dict:
    """JSON-safe copy (infinities as strings)."""
    def fix(v):
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, list):
            return [fix(x) for x in v]
        if isinstance(v, float) and not math.isfinite(v):
            return str(v)
        return v
    return fix(cfg)

