import csv
import json
import os
import subprocess
import sys

import pytest

from glmcmc.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from glmcmc.harness.config import DEFAULT_CONFIG


def write_cfg(tmp_path, body=""):
    p = tmp_path / "cfg.toml"
    p.write_text(body + '\n[sampler]\nmax_iterations = 20\ninner_steps = 4\n')
    return str(p)


def test_print_default_config(capsys):
    assert main(["--print-default-config"]) == EXIT_OK
    assert capsys.readouterr().out == DEFAULT_CONFIG


def test_no_command():
    assert main([]) == EXIT_CONFIG


def test_sample_and_report(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--config", write_cfg(tmp_path), "sample", "--out", str(out), "--seed", "4"]) == EXIT_OK
    rows = list(csv.DictReader(open(out / "runs.csv")))
    assert [r["seed"] for r in rows] == ["4"]
    assert json.load(open(out / "config_echo.json"))["config"]["seeds"] == [4]
    assert main(["report", "--out", str(out)]) == EXIT_OK
    assert "1/1 ok" in capsys.readouterr().out


def test_options_before_and_after_subcommand(tmp_path):
    out = tmp_path / "o"
    assert main(["--out", str(out), "--config", write_cfg(tmp_path), "verify", "--seed", "1"]) == EXIT_OK
    assert list(csv.DictReader(open(out / "verify.csv")))[0].keys() == {"check", "seed", "empirical", "theory", "pass"}


def test_synth_and_map(tmp_path):
    out = tmp_path / "o"
    cfg = write_cfg(tmp_path)
    assert main(["synth", "--config", cfg, "--out", str(out)]) == EXIT_OK
    names = sorted(os.listdir(out / "data"))
    assert names == ["n50_d2_e0.1_dl0.1_s0.csv", "n50_d2_e0.1_dl0.1_s0.csv.json",
                     "n50_d2_e0.1_dl0.1_s1.csv", "n50_d2_e0.1_dl0.1_s1.csv.json"]
    header = open(out / "data" / names[0]).readline().strip()
    assert header == "y,x1,x2"
    assert main(["map", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert len(list(csv.DictReader(open(out / "map.csv")))) == 2


@pytest.mark.parametrize("body", ['[grid]\nn = [1]\nd = [3]', '[model]\nfamily = "probit"', "seeds = ["])
def test_config_error_exit(tmp_path, body):
    assert main(["sample", "--config", write_cfg(tmp_path, body), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_exit(tmp_path):
    assert main(["sample", "--config", str(tmp_path / "nope.toml")]) == EXIT_CONFIG


def test_underdetermined_flag(tmp_path):
    cfg = write_cfg(tmp_path, '[grid]\nn = [2]\nd = [3]')
    assert main(["map", "--config", cfg, "--out", str(tmp_path), "--allow-underdetermined"]) == EXIT_OK


def test_sweep_exit_codes(tmp_path):
    assert main(["sweep", "--config", write_cfg(tmp_path), "--out", str(tmp_path)]) == EXIT_CONFIG
    cfg = write_cfg(tmp_path, "[grid]\nn = [100, 200, 400, 800]\neps = [0.4, 0.2, 0.1, 0.05]")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK


def test_partial_failure_exit(tmp_path):
    # a missing theta_star file makes every run fail
    cfg = write_cfg(tmp_path, f'[model]\ntheta_star = "{tmp_path / "absent.txt"}"')
    assert main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_PARTIAL
    rows = list(csv.DictReader(open(tmp_path / "o" / "runs.csv")))
    assert len(rows) == 2 and all(r["status"].startswith("error") for r in rows)


def test_report_missing_exit(tmp_path):
    assert main(["report", "--out", str(tmp_path / "none")]) == EXIT_PARTIAL


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "glmcmc", "--print-default-config"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("# glmcmc")
