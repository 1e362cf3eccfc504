import csv
import json

import pytest

from guided_dbf.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSeparationCommand:
    def test_reference_value(self, capsys):
        code, out, _ = run_cli(capsys, "separation", "--ly", "1",
                               "--delta-frac", "0.2", "--fc", "900e6")
        assert code == 0
        assert out.strip() == "1.843"

    def test_zero_spread(self, capsys):
        code, out, _ = run_cli(capsys, "separation", "--ly", "0",
                               "--delta-frac", "0.2")
        assert code == 0
        assert out.strip() == "0"

    def test_explicit_meters(self, capsys):
        code, out, _ = run_cli(capsys, "separation", "--ly", "1",
                               "--delta-m", "0.0666222")
        assert code == 0
        assert float(out) == pytest.approx(1.843, abs=1e-3)

    def test_zero_tolerance_is_usage_error(self, capsys):
        code, out, err = run_cli(capsys, "separation", "--ly", "1",
                                 "--delta-frac", "0")
        assert code == 2
        assert out == ""
        assert "tolerance" in err

    def test_non_numeric_args_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["separation", "--ly", "abc", "--delta-frac", "0.2"])
        assert exc.value.code == 2


class TestRunCommand:
    def test_seeded_runs_are_byte_identical(self, tmp_path, capsys):
        for sub in ("a", "b"):
            code, _, _ = run_cli(capsys, "run", "kfactor", "--seed", "7",
                                 "--trials", "5",
                                 "--set", "channel.k_grid_db=10,25",
                                 "--out", str(tmp_path / sub))
            assert code == 0
        assert ((tmp_path / "a" / "kfactor.csv").read_bytes()
                == (tmp_path / "b" / "kfactor.csv").read_bytes())

    def test_jobs_do_not_change_bytes(self, tmp_path, capsys):
        for sub, jobs in (("j1", "1"), ("j2", "2")):
            code, _, _ = run_cli(capsys, "run", "kfactor", "--seed", "7",
                                 "--trials", "5",
                                 "--set", "channel.k_grid_db=10,25",
                                 "--jobs", jobs, "--out", str(tmp_path / sub))
            assert code == 0
        assert ((tmp_path / "j1" / "kfactor.csv").read_bytes()
                == (tmp_path / "j2" / "kfactor.csv").read_bytes())

    def test_strategy_rows_per_grid_point(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", "distance-comparison",
                             "--trials", "2",
                             "--set", "distance.grid_km=1,25",
                             "--out", str(tmp_path))
        assert code == 0
        with open(tmp_path / "distance-comparison.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 3      # grid x {guided, feedback, random}
        assert {r["strategy"] for r in rows} == {"guided", "feedback", "random"}

    def test_beampattern_preset_row_count(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", "beampattern", "--preset", "fig10",
                             "--trials", "2", "--out", str(tmp_path))
        assert code == 0
        with open(tmp_path / "beampattern.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 361        # 1 degree grid, one preset

    def test_invalid_config_key_names_key_and_exits_2(self, tmp_path, capsys):
        code, out, err = run_cli(capsys, "run", "kfactor",
                                 "--set", "bogus.key=1",
                                 "--out", str(tmp_path))
        assert code == 2
        assert "bogus.key" in err

    def test_config_file_and_resolved_echo(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\n"
                       "trials = 4\n"
                       "channel.k_grid_db = 15\n")
        code, _, _ = run_cli(capsys, "run", "kfactor", "--config", str(cfg),
                             "--out", str(tmp_path))
        assert code == 0
        meta = (tmp_path / "kfactor.meta.txt").read_text()
        assert "config.trials = 4" in meta
        assert "config.channel.k_grid_db = 15" in meta
        assert "config_hash = " in meta

    def test_unknown_config_file_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("geometry.bogus = 3\n")
        code, _, err = run_cli(capsys, "run", "kfactor", "--config", str(cfg),
                               "--out", str(tmp_path))
        assert code == 2
        assert "geometry.bogus" in err

    def test_jsonlines_format(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", "kfactor", "--trials", "2",
                             "--set", "channel.k_grid_db=20",
                             "--format", "jsonlines", "--out", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "kfactor.jsonl").read_text().splitlines()
        assert len(lines) == 3
        row = json.loads(lines[0])
        assert set(row) == {"scenario", "strategy", "x1", "x2", "mean_gain",
                            "std_gain", "trials", "seed"}

    def test_env_seed_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("DBF_SIM_SEED", "31337")
        code, _, _ = run_cli(capsys, "run", "kfactor", "--trials", "2",
                             "--set", "channel.k_grid_db=20",
                             "--out", str(tmp_path))
        assert code == 0
        meta = (tmp_path / "kfactor.meta.txt").read_text()
        assert "config.seed = 31337" in meta

    def test_plot_rendering(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "run", "kfactor", "--trials", "2",
                             "--set", "channel.k_grid_db=10,25",
                             "--plot", "--out", str(tmp_path))
        assert code == 0
        png = tmp_path / "kfactor.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_unknown_scenario_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "frobnicate"])
        assert exc.value.code == 2

    def test_stdout_carries_summary_only(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "run", "kfactor", "--trials", "2",
                               "--set", "channel.k_grid_db=20",
                               "--out", str(tmp_path))
        assert code == 0
        assert out.strip() == f"kfactor: 3 rows -> {tmp_path / 'kfactor.csv'}"


class TestReproduceAll:
    def test_small_reproduce_all(self, tmp_path, capsys):
        # trial counts lowered for test runtime; the acceptance suite runs
        # the full default configuration
        args = ["reproduce-all", "--seed", "3", "--trials", "2",
                "--out", str(tmp_path), "--no-plots"]
        code, out, _ = run_cli(capsys, *args)
        assert code == 0
        csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
        assert csvs == ["beampattern.csv", "delta-sweep.csv",
                        "distance-comparison.csv", "kfactor.csv",
                        "localization.csv", "separation-sweep.csv"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert set(manifest["scenarios"]) == set(
            s.removesuffix(".csv") for s in csvs)
        for entry in manifest["scenarios"].values():
            assert entry["status"] == "ok"
            assert entry["seed"] == 3
            assert "runtime_s" in entry

    def test_idempotent_bytes(self, tmp_path, capsys):
        args = ["reproduce-all", "--seed", "3", "--trials", "2",
                "--no-plots"]
        run_cli(capsys, *args, "--out", str(tmp_path / "x"))
        run_cli(capsys, *args, "--out", str(tmp_path / "y"))
        for name in ("kfactor.csv", "separation-sweep.csv",
                     "distance-comparison.csv"):
            assert ((tmp_path / "x" / name).read_bytes()
                    == (tmp_path / "y" / name).read_bytes())
