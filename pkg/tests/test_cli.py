import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from volcopula.cli import load_config


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "volcopula.cli", *args],
        cwd=cwd,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    res = run_cli(
        ["simulate", "--days", "12", "--n-obs", "39", "--n-inner", "780",
         "--seed", "7", "--out-dir", "sim", "--export-truth"],
        cwd=root,
    )
    assert res.returncode == 0, res.stderr
    return root


DATA_ARGS = ["--data", "sim/panel.csv", "--freq-seconds", "600", "--log-prices"]


class TestPipeline:
    def test_simulate_outputs(self, sim_dir):
        summary = json.loads((sim_dir / "sim" / "simulate_summary.json").read_text())
        assert 0.0 < summary["accept_rate"] <= 1.0
        assert (sim_dir / "sim" / "true_variance.csv").exists()

    def test_spotvol(self, sim_dir):
        res = run_cli(["spot-vol", *DATA_ARGS, "--out-dir", "sv"], cwd=sim_dir)
        assert res.returncode == 0, res.stderr
        table = pd.read_csv(sim_dir / "sv" / "spot_variance.csv", comment="#")
        assert np.all(table["vx"] >= 0)
        assert table.shape[0] == 12 * 2  # ceil(39/36) = 2 blocks/day

    def test_copula_grid_corner(self, sim_dir):
        res = run_cli(["copula", *DATA_ARGS, "--out-dir", "cop"], cwd=sim_dir)
        assert res.returncode == 0, res.stderr
        table = pd.read_csv(sim_dir / "cop" / "copula_grid.csv", comment="#")
        corner = table[(table.u == 1.0) & (table.v == 1.0)]["C"].iloc[0]
        assert corner == 1.0
        assert len(table) == 100 * 100

    def test_gof_deterministic_files(self, sim_dir):
        for out in ("gof_a", "gof_b"):
            res = run_cli(
                ["gof", *DATA_ARGS, "--null", "gumbel:2", "--seed", "5", "-B", "1500",
                 "--out-dir", out],
                cwd=sim_dir,
            )
            assert res.returncode == 0, res.stderr
        a = (sim_dir / "gof_a" / "gof_result.json").read_bytes()
        b = (sim_dir / "gof_b" / "gof_result.json").read_bytes()
        assert a.replace(b"gof_a", b"") == b.replace(b"gof_b", b"")

    def test_band(self, sim_dir):
        res = run_cli(
            ["band", *DATA_ARGS, "--seed", "5", "-B", "1500", "--out-dir", "band"],
            cwd=sim_dir,
        )
        assert res.returncode == 0, res.stderr
        table = pd.read_csv(sim_dir / "band" / "band.csv", comment="#")
        assert np.all(table["lower"] <= table["C"] + 1e-12)
        assert np.all(table["C"] <= table["upper"] + 1e-12)
        assert np.all((table["lower"] >= 0) & (table["upper"] <= 1))

    def test_plot_data(self, sim_dir):
        res = run_cli(
            ["plot-data", *DATA_ARGS, "--kind", "kendall-function",
             "--family", "gumbel:2", "--out-dir", "pd"],
            cwd=sim_dir,
        )
        assert res.returncode == 0, res.stderr
        table = pd.read_csv(sim_dir / "pd" / "kendall_function.csv", comment="#")
        assert np.all(table["K"] + 1e-9 >= table["z"])
        assert np.array_equal(table["lower_bound"], table["z"])
        res2 = run_cli(
            ["plot-data", *DATA_ARGS, "--kind", "decile-contours", "--out-dir", "pd"],
            cwd=sim_dir,
        )
        assert res2.returncode == 0, res2.stderr

    def test_config_echo_embedded(self, sim_dir):
        first = (sim_dir / "cop" / "copula_grid.csv").read_text().splitlines()[0]
        assert first.startswith("# config:")
        summary = json.loads((sim_dir / "cop" / "copula_summary.json").read_text())
        assert summary["config"]["data"] == "sim/panel.csv"


class TestValidationErrors:
    def test_missing_seed_exit_one(self, sim_dir):
        res = run_cli(["simulate", "--days", "3", "--out-dir", "x"], cwd=sim_dir)
        assert res.returncode == 1
        assert "seed" in res.stderr

    def test_overwrite_protection(self, sim_dir):
        res = run_cli(
            ["simulate", "--days", "3", "--n-obs", "39", "--n-inner", "780",
             "--seed", "7", "--out-dir", "sim"],
            cwd=sim_dir,
        )
        assert res.returncode == 1
        assert "overwrite" in res.stderr

    def test_unknown_plot_kind_lists_supported(self, sim_dir):
        res = run_cli(
            ["plot-data", *DATA_ARGS, "--kind", "pie", "--out-dir", "pd2"], cwd=sim_dir
        )
        assert res.returncode == 1
        assert "tail-concentration" in res.stderr

    def test_bad_usage_exit_one(self, sim_dir):
        res = run_cli(["gof", "--definitely-not-a-flag"], cwd=sim_dir)
        assert res.returncode == 1

    def test_missing_data_exit_one(self, sim_dir):
        res = run_cli(["copula", "--out-dir", "c2"], cwd=sim_dir)
        assert res.returncode == 1


class TestConfigFile:
    def test_load_and_override(self, sim_dir, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# study configuration\n"
            "days = 6\n"
            "n-obs = 39\n"
            "n_inner = 780\n"
            "seed = 3\n"
            "copula = gumbel:1.5\n"
        )
        parsed = load_config(cfg)
        assert parsed == {"days": 6, "n_obs": 39, "n_inner": 780, "seed": 3, "copula": "gumbel:1.5"}
        res = run_cli(
            ["simulate", "--config", str(cfg), "--days", "4", "--out-dir", "cfgd"],
            cwd=sim_dir,
        )
        assert res.returncode == 0, res.stderr
        summary = json.loads((sim_dir / "cfgd" / "simulate_summary.json").read_text())
        assert summary["config"]["days"] == 4  # flag overrides file

    def test_malformed_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("days 6\n")
        with pytest.raises(ValueError, match="bad.cfg:1"):
            load_config(cfg)


class TestMcStudySmoke:
    def test_tiny_study(self, sim_dir):
        res = run_cli(
            ["mc-study", "--component", "band", "-M", "2", "--spans", "30",
             "--n-obs", "39", "-B", "1200", "--seed", "2", "--out-dir", "study"],
            cwd=sim_dir,
        )
        assert res.returncode == 0, res.stderr
        summary = json.loads((sim_dir / "study" / "study_summary.json").read_text())
        assert 0.0 <= summary["band"]["coverage"] <= 1.0
