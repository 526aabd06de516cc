import json
import math

import numpy as np
import pytest

from hbavg.errors import ConfigError
from hbavg.harness import (
    CSV_HEADER,
    cell_seed,
    config_hash,
    load_config,
    read_trajectory_csv,
    run_experiment,
    run_tuning,
)
from hbavg.harness.cli import main as cli_main

BASE_CONFIG = """
[problem]
family = random
dim = 20
seed = 3
target_mu = 1.0
target_L = 10000.0

[run]
iters = 400
seed = 7
x0 = gauss

[method hb_std]
kind = hb
alpha = one_over_L
beta = 0.95

[method hb_opt]
kind = hb
alpha = optimal
beta = optimal

[method ahb_large]
kind = ahb
alpha = one_over_L
beta = 0.999

[method wahb_rho]
kind = wahb
alpha = one_over_L
beta = 0.999
rho = 1.01
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(BASE_CONFIG)
    return path


class TestConfig:
    def test_key_order_and_whitespace_hash_identically(self, tmp_path):
        a = tmp_path / "a.cfg"
        b = tmp_path / "b.cfg"
        a.write_text("[problem]\nfamily = diag\nmu = 1.0\nL=100\ninterior =\n"
                     "[run]\niters = 10\n[method m]\nkind = hb\nbeta = 0.5\n")
        b.write_text("[run]\niters =   10\n[method m]\nbeta = 0.5\nkind=hb\n"
                     "[problem]\nL = 100\nfamily =  diag\nmu = 1.0\ninterior=\n")
        assert config_hash(load_config(a).sections) == config_hash(load_config(b).sections)

    def test_missing_methods_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[problem]\nfamily = diag\nmu = 1\nL = 10\n[run]\niters = 5\n")
        with pytest.raises(ConfigError, match="method"):
            load_config(path)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[problem]\nfamily = diag\nmu = 1\nL = 10\n[run]\niters = 5\n"
                        "[method m]\nkind = sgd\nbeta = 0.5\n")
        with pytest.raises(ConfigError, match="kind"):
            load_config(path)

    def test_cell_seed_stable_under_new_cells(self):
        assert cell_seed(7, "hb_std") == cell_seed(7, "hb_std")
        assert cell_seed(7, "hb_std") != cell_seed(7, "hb_opt")
        assert cell_seed(7, "hb_std") != cell_seed(8, "hb_std")


class TestRunExperiment:
    def test_four_cells_four_csvs_and_manifest(self, config_path, tmp_path):
        out = tmp_path / "out"
        manifest = run_experiment(load_config(config_path), out)
        assert len(manifest["cells"]) == 4
        files = {entry["file"] for entry in manifest["cells"]}
        assert len(files) == 4
        for entry in manifest["cells"]:
            assert (out / entry["file"]).exists()
            cols = read_trajectory_csv(out / entry["file"])
            assert cols["k"].size == 401
            assert not entry["diverged"]
        listed = json.loads((out / "manifest.json").read_text())
        assert listed["config_hash"] == config_hash(load_config(config_path).sections)
        on_disk = {p.name for p in out.glob("*.csv")}
        assert on_disk == files  # manifest complete in both directions

    def test_rerun_byte_identical(self, config_path, tmp_path):
        config = load_config(config_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        m1 = run_experiment(config, out1)
        m2 = run_experiment(config, out2)
        for e1, e2 in zip(m1["cells"], m2["cells"]):
            assert e1["file"] == e2["file"]
            assert (out1 / e1["file"]).read_bytes() == (out2 / e2["file"]).read_bytes()

    def test_csv_schema_and_finiteness(self, config_path, tmp_path):
        out = tmp_path / "out"
        manifest = run_experiment(load_config(config_path), out)
        entry = manifest["cells"][0]
        text = (out / entry["file"]).read_text().splitlines()
        assert text[0] == CSV_HEADER
        cols = read_trajectory_csv(out / entry["file"])
        for name in ("f_gap_raw", "f_gap_avg", "dist_raw", "dist_avg", "inf_norm_raw"):
            assert np.all(np.isfinite(cols[name]))

    def test_divergent_cell_flagged_with_nan_row(self, tmp_path):
        cfg = tmp_path / "div.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 100.0\ninterior =\n"
            "[run]\niters = 500\nx0 = ones\n"
            "[method wild]\nkind = hb\nalpha = 1.0\nbeta = 0.99\n"
            "[method tame]\nkind = hb\nalpha = one_over_L\nbeta = 0.5\n"
        )
        out = tmp_path / "out"
        manifest = run_experiment(load_config(cfg), out)
        by_name = {e["cell"]: e for e in manifest["cells"]}
        assert by_name["wild"]["diverged"]
        assert by_name["wild"]["divergence_k"] is not None
        assert not by_name["tame"]["diverged"]
        cols = read_trajectory_csv(out / by_name["wild"]["file"])
        assert math.isnan(cols["f_gap_raw"][-1])
        assert np.all(np.isfinite(cols["f_gap_raw"][:-1]))

    def test_parallel_matches_serial(self, config_path, tmp_path):
        config = load_config(config_path)
        serial = run_experiment(config, tmp_path / "s")
        import dataclasses

        parallel_cfg = dataclasses.replace(config, parallelism=4)
        parallel = run_experiment(parallel_cfg, tmp_path / "p")
        for e1, e2 in zip(serial["cells"], parallel["cells"]):
            assert (tmp_path / "s" / e1["file"]).read_bytes() == (
                tmp_path / "p" / e2["file"]
            ).read_bytes()

    def test_rahb_cell_writes_stage_starts(self, tmp_path):
        cfg = tmp_path / "r.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 50.0\ninterior = 5,10\n"
            "[run]\niters = 10\nx0 = ones\nseed = 1\n"
            "[method restart]\nkind = rahb\nbeta = 0.5\neps = 1e-4\nalpha = wahb_cap\n"
        )
        out = tmp_path / "out"
        manifest = run_experiment(load_config(cfg), out)
        entry = manifest["cells"][0]
        assert entry["stage_starts"] is not None
        assert len(entry["stage_starts"]) >= 1


class TestTune:
    def test_divergent_multiplier_excluded(self, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 100.0\ninterior = 10\n"
            "[run]\niters = 300\nx0 = ones\n"
            "[tune]\ngrid = 1,1e12\n"
            "[method hb]\nkind = hb\nbeta = 0.9\n"
        )
        out = tmp_path / "out"
        manifest = run_tuning(load_config(cfg), out)
        sel = manifest["selections"]["hb"]
        assert sel["multiplier"] == 1.0
        table = (out / "tuning_table.csv").read_text().splitlines()
        assert table[0].startswith("cell,kind,multiplier")
        flagged = [line for line in table[1:] if line.split(",")[-2] == "1"]
        assert len(flagged) == 1  # the 1e12/L cell diverged

    def test_single_cell_grid_selected(self, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 100.0\ninterior =\n"
            "[run]\niters = 100\nx0 = ones\n"
            "[tune]\ngrid = 0.5\n"
            "[method ahb]\nkind = ahb\nbeta = 0.9\n"
        )
        manifest = run_tuning(load_config(cfg), tmp_path / "out")
        assert manifest["selections"]["ahb"]["multiplier"] == 0.5


class TestCli:
    def test_run_and_exit_codes(self, config_path, tmp_path, capsys):
        out = tmp_path / "cli_out"
        assert cli_main(["run", str(config_path), "-o", str(out)]) == 0
        assert (out / "manifest.json").exists()
        assert "manifest" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[problem]\nfamily = nope\n[run]\niters = 5\n"
                       "[method m]\nkind = hb\nbeta = 0.5\n")
        assert cli_main(["run", str(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_all_cells_diverged_exit_3(self, tmp_path):
        cfg = tmp_path / "d.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 100.0\ninterior =\n"
            "[run]\niters = 200\nx0 = ones\n"
            "[tune]\ngrid = 1e12\n"
            "[method hb]\nkind = hb\nbeta = 0.9\n"
        )
        assert cli_main(["tune", str(cfg), "-o", str(tmp_path / "o")]) == 3

    def test_deviation_gd_modes(self, tmp_path, capsys):
        code = cli_main(["deviation", "--spectrum", "1,10,100",
                         "--alpha", "0.01", "--beta", "0"])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("spectrum,scheme,alpha,beta,dev")
        fields = out[1].split(",")
        assert float(fields[4]) == 1.0

    def test_deviation_averaged_below_raw(self, capsys):
        rows = {}
        for scheme in ("raw", "uniform"):
            assert cli_main(["deviation", "--spectrum", "1,25,400",
                             "--alpha", "0.002", "--beta", "0.8",
                             "--scheme", scheme]) == 0
            rows[scheme] = capsys.readouterr().out.splitlines()[1].split(",")
        assert float(rows["uniform"][4]) <= float(rows["raw"][4]) + 1e-12

    def test_deviation_gap_factor_threshold(self, tmp_path, capsys):
        assert cli_main(["deviation", "--spectrum", "1,40000,1000000",
                         "--f", "14"]) == 2
        assert "F > 14" in capsys.readouterr().err
        out_csv = tmp_path / "cmp.csv"
        assert cli_main(["deviation", "--spectrum", "1,2500,1000000",
                         "--gap-factor", "50", "-o", str(out_csv)]) == 0
        header, row = out_csv.read_text().splitlines()
        fields = dict(zip(header.split(","), row.split(",")))
        assert fields["within_bound"] == "1"

    def test_deviation_curves_file(self, tmp_path):
        curves = tmp_path / "curves.csv"
        assert cli_main(["deviation", "--spectrum", "1,100", "--alpha", "0.005",
                         "--beta", "0.5", "--curves", str(curves),
                         "-o", str(tmp_path / "s.csv")]) == 0
        lines = curves.read_text().splitlines()
        assert lines[0] == "mode,eigenvalue,k,norm"
        assert len(lines) > 10

    def test_datasets_inspect(self, tmp_path, capsys):
        data = tmp_path / "toy.txt"
        data.write_text("+1 1:1.0 3:2.0\n-1 2:0.5\n")
        assert cli_main(["datasets", "inspect", str(data)]) == 0
        out = capsys.readouterr().out
        assert "samples=2" in out
        assert "features=3" in out

    def test_tuned_run_prints_selection(self, tmp_path, capsys):
        cfg = tmp_path / "t.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 100.0\ninterior =\n"
            "[run]\niters = 100\nx0 = ones\n"
            "[tune]\ngrid = 0.5,1\n"
            "[method ahb]\nkind = ahb\nbeta = 0.9\n"
        )
        assert cli_main(["tune", str(cfg), "-o", str(tmp_path / "o")]) == 0
        assert "best multiplier" in capsys.readouterr().out


class TestRecipes:
    def test_all_shipped_recipes_parse(self):
        from pathlib import Path

        recipes = sorted((Path(__file__).parent.parent / "recipes").glob("*.cfg"))
        assert len(recipes) >= 9
        for recipe in recipes:
            config = load_config(recipe)
            assert config.cells

    def test_random_quadratic_recipe_cells_execute(self, tmp_path):
        # the four-cell comparison at reduced budget: one CSV per cell
        from pathlib import Path

        recipe = Path(__file__).parent.parent / "recipes" / "fig_random_k1e4_n100.cfg"
        text = recipe.read_text().replace("iters = 20000", "iters = 300")
        small = tmp_path / "small.cfg"
        small.write_text(text)
        manifest = run_experiment(load_config(small), tmp_path / "out")
        assert len(manifest["cells"]) == 4
        assert not any(entry["diverged"] for entry in manifest["cells"])
        assert len({entry["file"] for entry in manifest["cells"]}) == 4


class TestRunAllDiverged:
    def test_run_exit_3_when_every_cell_diverges(self, tmp_path):
        cfg = tmp_path / "alldiv.cfg"
        cfg.write_text(
            "[problem]\nfamily = diag\nmu = 1.0\nL = 100.0\ninterior =\n"
            "[run]\niters = 300\nx0 = ones\n"
            "[method a]\nkind = hb\nalpha = 1.0\nbeta = 0.99\n"
            "[method b]\nkind = ahb\nalpha = 2.0\nbeta = 0.95\n"
        )
        assert cli_main(["run", str(cfg), "-o", str(tmp_path / "o")]) == 3
        # the partial trajectories still land on disk
        csvs = list((tmp_path / "o").glob("*.csv"))
        assert len(csvs) == 2


def test_run_uses_config_outdir_when_no_flag(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "od.cfg"
    cfg.write_text(
        "[problem]\nfamily = diag\nmu = 1.0\nL = 10.0\ninterior =\n"
        "[run]\niters = 20\nx0 = ones\noutdir = from_config\n"
        "[method m]\nkind = ahb\nalpha = one_over_L\nbeta = 0.5\n"
    )
    monkeypatch.chdir(tmp_path)
    assert cli_main(["run", str(cfg)]) == 0
    assert (tmp_path / "from_config" / "manifest.json").exists()
