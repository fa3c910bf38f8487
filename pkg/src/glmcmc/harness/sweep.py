"""Scaling sweeps: empirical Gibbs iterations-to-threshold and formula-implied HMC cost."""

from __future__ import annotations

import logging
import math
import os
import time

import numpy as np

from .. import rng as rngmod
from ..diagnostics import ks_stats
from ..errors import InsufficientGrid
from ..mapsolve import find_map
from ..samplers import GibbsEnsemble, feasible_init, hmc_params_from_theory, theory_constants
from .config import Cell
from .runner import build_problem, write_echo, write_rows

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ["sweep", "x", "y", "seed", "detail"]
MIN_GRID = 4


def fit_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``; needs at least four distinct x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(x).size < MIN_GRID:
        raise InsufficientGrid(f"need at least {MIN_GRID} distinct grid values, got {np.unique(x).size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# formula sweeps --------------------------------------------------------------
def hmc_gradient_count(cfg: dict, cell: Cell, seed: int) -> int:
    """Theory-scheduled ``N T/h`` for one cell, with constants from a synthetic dataset."""
    sc, _, _, post = build_problem(cfg, cell, seed)
    C_pi = post.prior.curvature_constant(cell.d, post.X)
    tc = theory_constants(post.family, C_pi, cell.n, cell.d, sc.stats.lam_max, sc.stats.kappa,
                          cfg["theory"]["c_star"])
    p = hmc_params_from_theory(tc, cell.eps, cfg["sampler"]["u"])
    return p.N * p.n_steps


def hmc_n_sweep(cfg: dict, seed: int = 0):
    """``(rows, slope)`` of ``N T/h`` against ``n`` at the first ``d``, ``eps``, ``delta``."""
    g = cfg["grid"]
    d, eps, delta = g["d"][0], g["eps"][0], g["delta"][0]
    ns = list(g["n"])
    ys = [hmc_gradient_count(cfg, Cell(n, d, eps, delta), seed) for n in ns]
    rows = [{"sweep": "hmc_n", "x": n, "y": y, "seed": seed, "detail": f"d={d} eps={eps}"} for n, y in zip(ns, ys)]
    return rows, fit_slope(ns, ys)


def hmc_eps_sweep(cfg: dict, seed: int = 0):
    """``(rows, slope)`` of ``N T/h`` against ``1/eps`` at the first ``n``, ``d``, ``delta``."""
    g = cfg["grid"]
    n, d, delta = g["n"][0], g["d"][0], g["delta"][0]
    inv = [1.0 / e for e in g["eps"]]
    ys = [hmc_gradient_count(cfg, Cell(n, d, e, delta), seed) for e in g["eps"]]
    rows = [{"sweep": "hmc_eps", "x": x, "y": y, "seed": seed, "detail": f"n={n} d={d}"} for x, y in zip(inv, ys)]
    return rows, fit_slope(inv, ys)


# empirical Gibbs sweep -------------------------------------------------------
def _laplace_draws(post, theta_map, m, rng):
    C = np.linalg.cholesky(post.hess(theta_map))
    return theta_map + np.linalg.solve(C.T, rng.standard_normal((m, post.d)).T).T


def gibbs_iterations_to_threshold(cfg: dict, d: int, seed: int = 0) -> dict:
    """Iterations until every marginal KS distance to a reference ensemble drops below the threshold.

    ``m`` chains start from the feasible initialization. The reference is an
    independent ensemble started from the Laplace approximation and run for
    ``reference_per_d * d`` iterations.
    """
    sw = cfg["sweep"]
    n = sw["n_per_d"] * d
    cell = Cell(n, d, cfg["grid"]["eps"][0], cfg["grid"]["delta"][0])
    sc, _, _, post = build_problem(cfg, cell, seed)
    res = find_map(post, lam_max=sc.stats.lam_max)
    C_pi = post.prior.curvature_constant(d, post.X)
    tc = theory_constants(post.family, C_pi, n, d, sc.stats.lam_max, sc.stats.kappa, cfg["theory"]["c_star"])
    prec = 3.0 * tc.L_sc * tc.lam_max * n
    m = sw["chains"]

    ref = GibbsEnsemble(post, _laplace_draws(post, res.theta_map, m, rngmod.stream(seed, "reference")),
                        seed, stream_id=1)
    with np.errstate(over="ignore"):
        for _ in range(sw["reference_per_d"] * d):
            ref.step()
    ref_sample = ref.theta.copy()

    theta0 = feasible_init(res.theta_map, prec, rngmod.stream(seed, "init"), size=m)
    ens = GibbsEnsemble(post, theta0, seed, stream_id=0)
    cap = sw["max_iterations_per_d"] * d
    t0 = time.perf_counter()
    hit, ks = None, math.nan
    with np.errstate(over="ignore"):
        for k in range(1, cap + 1):
            ens.step()
            ks = float(np.max(ks_stats(ens.theta, ref_sample)))
            if ks < sw["ks_threshold"]:
                hit = k
                break
    return {"d": d, "n": n, "iterations": hit, "ks": ks, "cap": cap, "chains": m,
            "wall_time": time.perf_counter() - t0}


def gibbs_d_sweep(cfg: dict, seed: int = 0):
    """``(rows, slope)`` of iterations-to-threshold against ``d`` at fixed ``n/d``."""
    ds = list(cfg["grid"]["d"])
    if len(set(ds)) < MIN_GRID:
        raise InsufficientGrid(f"need at least {MIN_GRID} values of d")
    out = [gibbs_iterations_to_threshold(cfg, d, seed) for d in ds]
    rows = [{"sweep": "gibbs_d", "x": r["d"], "y": r["iterations"] if r["iterations"] else math.nan,
             "seed": seed, "detail": f"n={r['n']} ks={r['ks']:.4f} chains={r['chains']}"} for r in out]
    missing = [r["d"] for r in out if r["iterations"] is None]
    if missing:
        log.warning("KS threshold not reached within the cap for d=%s", missing)
        return rows, math.nan
    return rows, fit_slope(ds, [r["iterations"] for r in out])


SWEEPS = {"gibbs_d": gibbs_d_sweep, "hmc_n": hmc_n_sweep, "hmc_eps": hmc_eps_sweep}


def sweep_scaling(cfg: dict, out_dir=None) -> dict:
    """Run the configured sweeps; writes ``sweep.csv`` and ``slopes.csv``; returns the slopes."""
    out_dir = cfg["out"] if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    seed = cfg["seeds"][0]
    rows, slopes = [], {}
    for name in cfg["sweep"]["kinds"]:
        r, s = SWEEPS[name](cfg, seed)
        rows.extend(r)
        slopes[name] = s
    write_rows(os.path.join(out_dir, "sweep.csv"), rows, SWEEP_COLUMNS)
    write_rows(os.path.join(out_dir, "slopes.csv"),
               [{"sweep": k, "slope": v} for k, v in slopes.items()], ["sweep", "slope"])
    write_echo(cfg, out_dir)
    return slopes
