"""Command-line interface: ``glmcmc {synth,map,sample,verify,sweep,report}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from .errors import ConfigError, InsufficientGrid
from .harness.config import DEFAULT_CONFIG, cells, load_config
from .harness.report import format_report, make_report
from .harness.runner import build_problem, failures, run_experiment, write_echo
from .harness.sweep import sweep_scaling
from .harness.verify import run_verify, verify_failures
from .mapsolve import find_map
from .synth import write_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3

log = logging.getLogger("glmcmc")


def _parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's parser from resetting options given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="TOML experiment configuration")
    common.add_argument("--seed", metavar="U64", type=int, help="run this single seed instead of the configured list")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", metavar="K", type=int, help="worker processes")
    common.add_argument("--allow-underdetermined", action="store_true", help="permit grid cells with n < d")
    common.add_argument("-v", "--verbose", action="count")

    p = argparse.ArgumentParser(prog="glmcmc", description="Theory-scheduled MCMC for Bayesian GLMs.",
                                parents=[common])
    p.add_argument("--print-default-config", action="store_true", help="print the default TOML and exit")
    sub = p.add_subparsers(dest="command")
    helps = {
        "synth": "write synthetic datasets (CSV plus JSON sidecar) for every cell and seed",
        "map": "compute posterior modes and write map.csv",
        "sample": "run the theory-scheduled samplers and write runs.csv",
        "verify": "evaluate theory-vs-empirical checks and write verify.csv",
        "sweep": "run scaling sweeps and write sweep.csv and slopes.csv",
        "report": "summarize runs.csv and verify.csv in the output directory",
    }
    for name, text in helps.items():
        sub.add_parser(name, help=text, parents=[common])
    return p


def _overrides(args) -> dict:
    o = {}
    if getattr(args, "seed", None) is not None:
        o["seeds"] = [args.seed]
    if getattr(args, "out", None) is not None:
        o["out"] = args.out
    if getattr(args, "threads", None) is not None:
        o["threads"] = args.threads
    if getattr(args, "allow_underdetermined", False):
        o["allow_underdetermined"] = True
    return o


def _synth(cfg) -> int:
    d = os.path.join(cfg["out"], "data")
    os.makedirs(d, exist_ok=True)
    bad = 0
    for cell in cells(cfg):
        for seed in cfg["seeds"]:
            try:
                sc, X, Y, _ = build_problem(cfg, cell, seed)
                write_dataset(sc, os.path.join(d, f"{cell.key}_s{seed}.csv"), X, Y)
            except Exception as e:
                log.error("synth failed for %s seed %d: %s", cell.key, seed, e)
                bad += 1
    write_echo(cfg, cfg["out"])
    return bad


def _map(cfg) -> int:
    os.makedirs(cfg["out"], exist_ok=True)
    bad = 0
    with open(os.path.join(cfg["out"], "map.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "seed", "status", "converged", "iterations", "grad_norm", "dist_to_truth", "theta_map"])
        for cell in cells(cfg):
            for seed in cfg["seeds"]:
                try:
                    sc, _, _, post = build_problem(cfg, cell, seed)
                    r = find_map(post, theta_star=sc.theta_star, lam_max=sc.stats.lam_max)
                    w.writerow([cell.key, seed, "ok", int(r.converged), r.iterations, repr(r.grad_norm),
                                repr(r.distance_to_truth), " ".join(repr(float(x)) for x in r.theta_map)])
                except Exception as e:
                    bad += 1
                    w.writerow([cell.key, seed, f"error: {type(e).__name__}: {e}", "", "", "", "", ""])
    write_echo(cfg, cfg["out"])
    return bad


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.print_default_config:
        sys.stdout.write(DEFAULT_CONFIG)
        return EXIT_OK
    if args.command is None:
        _parser().print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(getattr(args, "config", None), _overrides(args))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    cmd = args.command
    if cmd == "synth":
        bad = _synth(cfg)
    elif cmd == "map":
        bad = _map(cfg)
    elif cmd == "sample":
        bad = failures(run_experiment(cfg))
    elif cmd == "verify":
        bad = verify_failures(run_verify(cfg))
    elif cmd == "sweep":
        try:
            slopes = sweep_scaling(cfg)
        except (ConfigError, InsufficientGrid) as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except Exception as e:
            print(f"sweep failed: {type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_PARTIAL
        for k, v in slopes.items():
            print(f"{k}: slope {v:.4f}")
        bad = sum(v != v for v in slopes.values())
    else:
        try:
            print(format_report(make_report(cfg["out"])))
        except FileNotFoundError as e:
            print(str(e), file=sys.stderr)
            return EXIT_PARTIAL
        bad = 0
    if bad:
        print(f"{bad} failure(s); see the output files in {cfg['out']}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
