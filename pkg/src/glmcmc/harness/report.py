"""Summaries of ``runs.csv`` and ``verify.csv``: per-cell and per-check pass frequencies."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict


def _read(path):
    if not os.path.exists(path):
        return None
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def _mean(xs):
    xs = [x for x in xs if not math.isnan(x)]
    return sum(xs) / len(xs) if xs else math.nan


def summarize_runs(rows) -> dict:
    cells = defaultdict(list)
    for r in rows:
        cells[r["cell"]].append(r)
    out = {}
    for key, rs in cells.items():
        out[key] = {
            "runs": len(rs),
            "ok": sum(r["status"] == "ok" for r in rs),
            "map_radius_pass_rate": _mean([_num(r["map_radius_pass"]) for r in rs]),
            "mean_min_ess": _mean([_num(r["min_ess"]) for r in rs]),
            "mean_wall_time": _mean([_num(r["wall_time"]) for r in rs]),
        }
    return out


def summarize_verify(rows) -> dict:
    """Pass frequency per check family (the part of the name before ``@`` or ``[``)."""
    groups = defaultdict(list)
    for r in rows:
        name = r["check"].split("@")[0].split("[")[0]
        groups[name].append(r["pass"])
    out = {}
    for name, ps in groups.items():
        scored = [p for p in ps if p in ("0", "1")]
        out[name] = {"rows": len(ps), "scored": len(scored),
                     "pass_rate": (sum(p == "1" for p in scored) / len(scored)) if scored else math.nan}
    return out


def make_report(out_dir) -> dict:
    """Read the CSVs in ``out_dir``, write ``report.json`` and return the summary."""
    runs = _read(os.path.join(out_dir, "runs.csv"))
    ver = _read(os.path.join(out_dir, "verify.csv"))
    if runs is None and ver is None:
        raise FileNotFoundError(f"no runs.csv or verify.csv in {out_dir}")
    rep = {"runs": summarize_runs(runs) if runs else {}, "verify": summarize_verify(ver) if ver else {}}
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(rep, fh, indent=2, sort_keys=True, default=str)
    return rep


def format_report(rep: dict) -> str:
    lines = []
    for key, s in rep["runs"].items():
        lines.append(f"{key}: {s['ok']}/{s['runs']} ok, MAP-radius pass rate {s['map_radius_pass_rate']:.2f}, "
                     f"mean min ESS {s['mean_min_ess']:.1f}")
    for name, s in rep["verify"].items():
        lines.append(f"{name}: pass rate {s['pass_rate']:.3f} over {s['scored']} scored rows")
    return "\n".join(lines)
