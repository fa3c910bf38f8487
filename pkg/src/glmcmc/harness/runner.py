"""Grid runner: synth, MAP, theory schedule, chain, diagnostics, one CSV row per run."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from .. import rng as rngmod
from ..diagnostics import distance_report, ess
from ..families import LINEAR
from ..mapsolve import find_map
from ..posterior import Posterior
from ..priors import FLAT, GAUSSIAN, ZELLNER
from ..samplers import (
    feasible_init,
    gibbs_params_from_theory,
    hmc_params_from_theory,
    poisson_gibbs_params,
    run_gibbs,
    run_hmc,
    theory_constants,
    with_inner_steps,
)
from ..synth import SynthConfig, make_dataset, sigma_cholesky, true_parameter
from .config import Cell, build_family, build_prior, cells, echo

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RUN_COLUMNS = [
    "schema_version", "cell", "seed", "status", "family", "prior", "sampler", "u",
    "n", "d", "eps", "delta", "lam_max", "kappa_sigma", "C_pi", "L_sc", "C_bar",
    "N_theory", "N_run", "h", "T", "steps", "steps_theory",
    "grad_evals", "grad_evals_theory", "grad_calls",
    "map_dist", "map_grad_norm", "map_converged", "map_radius_pass",
    "init_dist", "mean_dist_map", "min_ess", "nonfinite",
    "ref_sliced_w2", "ref_max_ks", "ref_max_tv",
    "wall_time", "timestamp",
]
VOLATILE_COLUMNS = ("wall_time", "timestamp")


# dataset and model ---------------------------------------------------------
def build_problem(cfg: dict, cell: Cell, seed: int):
    """``(synth_config, X, Y, posterior)`` for one grid cell and seed."""
    m = cfg["model"]
    fam = build_family(cfg)
    L = sigma_cholesky(m["design_cov"], cell.d)
    theta_star = true_parameter(m["theta_star"], cell.d, seed, float(m["theta_norm"]))
    sc = SynthConfig(cell.n, cell.d, L, theta_star, fam, seed)
    X, Y = make_dataset(sc)
    post = Posterior(fam, build_prior(cfg, cell.d), X, Y)
    return sc, X, Y, post


def _conjugate(post) -> bool:
    return post.family.kind == LINEAR and post.prior.kind in (FLAT, GAUSSIAN, ZELLNER)


def _exact_draws(post, mean, size, rng):
    """Draws from a Gaussian posterior with mean ``mean`` and precision ``hess``."""
    C = np.linalg.cholesky(post.hess(mean))
    z = rng.standard_normal((size, post.d))
    return mean + np.linalg.solve(C.T, z.T).T


# one run -------------------------------------------------------------------
def _empty_row(cfg, cell: Cell, seed: int) -> dict:
    row = dict.fromkeys(RUN_COLUMNS, math.nan)
    s = cfg["sampler"]
    row.update(schema_version=SCHEMA_VERSION, cell=cell.key, seed=seed, status="ok",
               family=cfg["model"]["family"], prior=cfg["model"]["prior"], sampler=s["kind"],
               u=s["u"] if s["kind"] == "hmc" else "", n=cell.n, d=cell.d, eps=cell.eps, delta=cell.delta)
    return row


def _schedule(cfg, cell, sc, post):
    """Theory constants, sampler parameters and the schedule part of the row."""
    s, t = cfg["sampler"], cfg["theory"]
    st = sc.stats
    C_pi = post.prior.curvature_constant(cell.d, post.X)
    tc = theory_constants(post.family, C_pi, cell.n, cell.d, st.lam_max, st.kappa, t["c_star"])
    info = dict(lam_max=st.lam_max, kappa_sigma=st.kappa, C_pi=C_pi, L_sc=tc.L_sc, C_bar=tc.C_bar)
    if s["kind"] == "hmc":
        theory = hmc_params_from_theory(tc, cell.eps, s["u"])
        params = theory if s["inner_steps"] == 0 else with_inner_steps(theory, s["inner_steps"])
        info.update(N_theory=theory.N, h=params.h, T=params.T, steps=params.n_steps,
                    steps_theory=theory.n_steps, grad_evals_theory=theory.N * theory.n_steps)
    elif s["kind"] == "gibbs":
        params = gibbs_params_from_theory(tc, cell.eps)
        info.update(N_theory=params.N)
    else:
        params = poisson_gibbs_params(cell.n, cell.d, st.lam_max, st.kappa, cell.eps, cell.delta,
                                      t["poisson_c"])
        info.update(N_theory=params.N)
    return tc, params, info


def _chain(cfg, post, params, theta_map, seed: int, n_iter: int, chain_id: int = 0):
    """Trace ``(k, d)`` (start included) and the number of gradient calls."""
    s = cfg["sampler"]
    if s["kind"] == "hmc":
        # uniform point of the ball of radius init_radius about theta_map
        g = rngmod.stream(seed, "init", chain_id)
        v = g.standard_normal(post.d)
        v *= params.init_radius * g.random() ** (1.0 / post.d) / np.linalg.norm(v)
        trace, calls = run_hmc(post, params, theta_map + v, n_iter, seed, chain_id, s["thin"])
        return trace[:, 0, :], calls
    theta0 = feasible_init(theta_map, params.init_precision, rngmod.stream(seed, "init", chain_id))
    return run_gibbs(post, params, theta_map, n_iter, seed, chain_id, s["thin"], theta0), 0


def run_one(cfg: dict, cell: Cell, seed: int, trace_dir=None) -> dict:
    """All stages for one grid cell and seed; exceptions become a failed row."""
    row = _empty_row(cfg, cell, seed)
    try:
        sc, X, Y, post = build_problem(cfg, cell, seed)
        res = find_map(post, theta_star=sc.theta_star, lam_max=sc.stats.lam_max)
        row.update(map_dist=res.distance_to_truth, map_grad_norm=res.grad_norm,
                   map_converged=int(res.converged),
                   map_radius_pass=int(res.distance_to_truth <= sc.stats.lam_max ** -0.5))
        tc, params, info = _schedule(cfg, cell, sc, post)
        row.update(info)
        n_run = min(params.N, cfg["sampler"]["max_iterations"])
        row["N_run"] = n_run
        if cfg["sampler"]["kind"] == "hmc":
            row["grad_evals"] = n_run * params.n_steps

        t0 = time.perf_counter()
        with np.errstate(over="ignore"):
            trace, calls = _chain(cfg, post, params, res.theta_map, seed, n_run)
        row["wall_time"] = time.perf_counter() - t0
        if cfg["sampler"]["kind"] == "hmc":
            row["grad_calls"] = calls
        row["nonfinite"] = int(not np.all(np.isfinite(trace)))
        row["init_dist"] = float(np.linalg.norm(trace[0] - res.theta_map))
        body = trace[1:]
        row["mean_dist_map"] = float(np.linalg.norm(body.mean(axis=0) - res.theta_map))
        if len(body) >= 10:
            row["min_ess"] = float(min(ess(body[:, j]) for j in range(post.d)))
        if cfg["sampler"]["reference"]:
            row.update(_reference(cfg, post, params, res.theta_map, seed, n_run, body))
        if trace_dir is not None:
            write_trace(os.path.join(trace_dir, f"{cell.key}_s{seed}.csv"), trace, cfg["sampler"]["thin"])
        if row["nonfinite"]:
            row["status"] = "error: NonFiniteTrace"
    except Exception as e:  # isolate the failure to this row
        log.warning("cell %s seed %d failed: %s", cell.key, seed, e)
        log.debug("%s", traceback.format_exc())
        row["status"] = f"error: {type(e).__name__}: {e}".replace("\n", " ")
    row["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return row


def _reference(cfg, post, params, theta_map, seed, n_run, body):
    """Distances of the second half of ``body`` to a reference sample.

    Conjugate Gaussian cases use exact draws; otherwise a 10x longer chain of
    the same sampler from the ``reference`` stream, thinned by 10.
    """
    half = body[len(body) // 2:]
    ref_rng = rngmod.stream(seed, "reference")
    if _conjugate(post):
        ref = _exact_draws(post, theta_map, max(len(half), 1000), ref_rng)
    else:
        seed_ref = int(ref_rng.integers(2**63))
        trace, _ = _chain(cfg, post, params, theta_map, seed_ref, 10 * n_run, chain_id=1)
        ref = trace[1:][::10]
        ref = ref[len(ref) // 2:]
    rep = distance_report(half, ref, rng=rngmod.stream(seed, "diagnostic"))
    return {"ref_sliced_w2": rep.sliced_w2, "ref_max_ks": float(rep.ks_stats.max()),
            "ref_max_tv": float(rep.marginal_tv.max())}


# files -----------------------------------------------------------------
def write_trace(path, trace, thin: int = 1, chain_id: int = 0) -> None:
    """Trace CSV with rows ``chain_id,iter,theta_1..theta_d``."""
    trace = np.asarray(trace, dtype=float)
    d = trace.shape[-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chain_id", "iter"] + [f"theta_{j + 1}" for j in range(d)])
        for k, th in enumerate(trace):
            w.writerow([chain_id, k * thin] + [repr(float(x)) for x in th])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_rows(path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def write_echo(cfg: dict, out_dir) -> None:
    with open(os.path.join(out_dir, "config_echo.json"), "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "config": echo(cfg)}, fh, indent=2, sort_keys=True)


def _task(args):
    cfg, cell, seed, trace_dir = args
    return run_one(cfg, cell, seed, trace_dir)


def map_tasks(fn, tasks, threads: int):
    """``fn`` over ``tasks`` in order, on a process pool when ``threads > 1``."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def run_experiment(cfg: dict, out_dir=None) -> list[dict]:
    """Run every grid cell and seed; write ``runs.csv`` and ``config_echo.json``.

    Rows are ordered by (cell, seed) regardless of ``threads``. Returns the rows.
    """
    out_dir = cfg["out"] if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    trace_dir = None
    if cfg["sampler"]["trace"]:
        trace_dir = os.path.join(out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
    tasks = [(cfg, c, s, trace_dir) for c in cells(cfg) for s in cfg["seeds"]]
    rows = map_tasks(_task, tasks, cfg["threads"])
    write_rows(os.path.join(out_dir, "runs.csv"), rows, RUN_COLUMNS)
    write_echo(cfg, out_dir)
    return rows


def failures(rows) -> int:
    """Number of rows whose status is not ``ok``."""
    return sum(1 for r in rows if r.get("status") != "ok")
