"""Batch front end: config validation, exit codes, artifacts, reproducibility."""

import json
import os

import numpy as np
import pytest

import swflow.cli as cli
from swflow.errors import ConfigError
from swflow.snapshots import load_snapshot


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


MINIMIZE_CFG = {
    "command": "minimize",
    "lattice": {"dims": [4, 4, 4, 4], "lengths": [1.0, 1.0, 1.0, 1.0]},
    "flux": [0, 0, 0, 0, 0, 0],
    "k_field": {"constant": -1.0},
    "amplitude": 0.05,
    "seed": 1,
}

HOMOTOPY_CFG = {
    "command": "homotopy",
    "topology": {
        "profile": {"H1": {"free_rank": 4}, "H2": {"free_rank": 6},
                    "chi": 0, "sigma": 0, "vol": 1.0, "k_min": 0.0},
        "n": [1, 2, 3],
    },
}


# ---------------------------------------------------------------------------
# Validation


def test_load_config_rejects_unknown_keys(tmp_path):
    path = write_config(tmp_path, dict(MINIMIZE_CFG, typo=1))
    with pytest.raises(ConfigError):
        cli.load_config(path)


def test_load_config_rejects_bad_flux_and_k_field(tmp_path):
    bad_flux = dict(MINIMIZE_CFG, flux=[0, 0, 0])
    with pytest.raises(ConfigError):
        cli.load_config(write_config(tmp_path, bad_flux, "f.json"))
    bad_k = dict(MINIMIZE_CFG, k_field={"constant": 0.0, "path": "x.npy"})
    with pytest.raises(ConfigError):
        cli.load_config(write_config(tmp_path, bad_k, "k.json"))
    no_k = dict(MINIMIZE_CFG, k_field={})
    with pytest.raises(ConfigError):
        cli.load_config(write_config(tmp_path, no_k, "n.json"))


def test_load_config_command_mismatch_and_overrides(tmp_path):
    path = write_config(tmp_path, MINIMIZE_CFG)
    with pytest.raises(ConfigError):
        cli.load_config(path, command="energy")
    cfg = cli.load_config(path, command="minimize", seed=7, out="elsewhere")
    assert cfg["seed"] == 7
    assert cfg["output_dir"] == "elsewhere"


def test_main_exits_2_on_config_error(tmp_path):
    path = write_config(tmp_path, dict(MINIMIZE_CFG, optimizer={"bogus": 1}))
    assert cli.main(["minimize", "--config", path]) == cli.EXIT_CONFIG
    missing = str(tmp_path / "absent.json")
    assert cli.main(["energy", "--config", missing]) == cli.EXIT_CONFIG


def test_seed_initial_rejects_branch_unsafe_flux():
    from swflow.lattice import LatticeSpec
    spec = LatticeSpec((2,) * 4, (1.0,) * 4)
    with pytest.raises(ConfigError):
        cli.seed_initial({"flux": [2, 0, 0, 0, 0, 0], "seed": 0,
                          "amplitude": 0.0}, spec)


# ---------------------------------------------------------------------------
# Commands and artifacts


def run_cli(tmp_path, payload, command, subdir, seed=None):
    path = write_config(tmp_path, payload, f"{subdir}.json")
    out = str(tmp_path / subdir)
    argv = [command, "--config", path, "--out", out]
    if seed is not None:
        argv += ["--seed", str(seed)]
    code = cli.main(argv)
    report = json.loads((tmp_path / subdir / "report.json").read_text())
    return code, report, tmp_path / subdir


def test_minimize_command_writes_all_artifacts(tmp_path):
    code, report, out = run_cli(tmp_path, MINIMIZE_CFG, "minimize", "m")
    assert code == cli.EXIT_OK
    assert report["results"]["converged"]
    assert abs(report["results"]["energy"]["total"] - (-0.125)) <= 1e-6
    assert (out / "trace.csv").exists()
    c, flux = load_snapshot(out / "final.swlatt")
    assert flux == (0,) * 6
    assert abs(float(np.max(np.abs(c.phi.psi[0]) ** 2
                            + np.abs(c.phi.psi[1]) ** 2)) - 1.0) <= 1e-6
    with open(out / "trace.csv") as f:
        header = f.readline().strip().split(",")
    from swflow.optimizer import TRACE_COLUMNS
    assert header == list(TRACE_COLUMNS)


def test_minimize_exits_4_when_budget_is_too_small(tmp_path):
    cfg = dict(MINIMIZE_CFG, optimizer={"max_iter": 3})
    code, report, _ = run_cli(tmp_path, cfg, "minimize", "short")
    assert code == cli.EXIT_NO_CONVERGENCE
    assert not report["results"]["converged"]


def test_energy_command_and_report_reproducibility(tmp_path):
    cfg = {
        "command": "energy",
        "lattice": {"dims": [4, 4, 4, 4], "lengths": [1.0, 1.0, 1.0, 1.0]},
        "flux": [1, 0, 0, 0, 0, 0],
        "k_field": {"constant": 0.0},
        "amplitude": 0.01,
        "seed": 5,
    }
    code1, rep1, out1 = run_cli(tmp_path, cfg, "energy", "e1")
    code2, rep2, out2 = run_cli(tmp_path, cfg, "energy", "e2")
    assert code1 == code2 == cli.EXIT_OK
    rep1.pop("timestamp"), rep2.pop("timestamp")
    rep1["config"].pop("output_dir"), rep2["config"].pop("output_dir")
    assert rep1 == rep2
    assert (out1 / "final.swlatt").read_bytes() == \
        (out2 / "final.swlatt").read_bytes()


def test_homotopy_command_reports_table(tmp_path):
    code, report, _ = run_cli(tmp_path, HOMOTOPY_CFG, "homotopy", "h")
    assert code == cli.EXIT_OK
    rows = {r["n"]: r["group"]["name"] for r in report["results"]["pi_n"]}
    assert rows == {1: "Z^4", 2: "Z", 3: "0"}
    assert report["results"]["pi_zero"]["name"] == "Z^6"


def test_enumerate_command(tmp_path):
    cfg = {
        "command": "enumerate",
        "topology": {
            "Q": [[1]], "w": [1],
            "profile": {"H1": {}, "H2": {"free_rank": 1},
                        "chi": 3, "sigma": 1, "vol": 1.0, "k_min": 0.0},
            "radius": 5,
        },
    }
    code, report, _ = run_cli(tmp_path, cfg, "enumerate", "en")
    assert code == cli.EXIT_OK
    assert report["results"]["count"] == 0
    assert report["results"]["classes"] == []


def test_check_identities_command(tmp_path):
    cfg = {
        "command": "check-identities",
        "lattice": {"dims": [4, 4, 4, 4], "lengths": [1.0, 1.0, 1.0, 1.0]},
        "samples": 10,
    }
    code, report, _ = run_cli(tmp_path, cfg, "check-identities", "ci")
    assert code == cli.EXIT_OK
    assert report["results"]["max_deviation"] <= 1e-12


def test_convergence_study_command(tmp_path):
    cfg = {
        "command": "convergence-study",
        "flux": [1, 0, 0, 0, 0, 0],
        "k_field": {"constant": 0.0},
        "amplitude": 0.01,
        "seed": 0,
        "study": {"sizes": [4, 6], "reference": float(np.pi ** 2)},
    }
    code, report, _ = run_cli(tmp_path, cfg, "convergence-study", "cs")
    assert code == cli.EXIT_OK
    res = report["results"]
    assert all(r["converged"] for r in res["rows"])
    assert all(e <= 1e-8 for e in res["errors"])
