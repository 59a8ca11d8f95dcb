import json
import math
import subprocess
import sys

import numpy as np
import pytest

from lincap import cli, linop
from lincap.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, main, read_config, resolve
from lincap.verify import run_checks


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestValidation:
    def test_alphabet_one_rejected(self, capsys):
        code, _, err = run(["capacity", "--alphabet", "1"], capsys)
        assert code == EXIT_INVALID and "at least 2" in err

    def test_sweep_step_zero_rejected(self, capsys):
        code, _, err = run(["sweep", "--step", "0"], capsys)
        assert code == EXIT_INVALID and "step" in err

    def test_unknown_flag_is_validation_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["capacity", "--bogus"])
        assert exc.value.code == EXIT_INVALID

    def test_bad_detector(self, capsys):
        code, _, _ = run(["detector-sweep", "--detector-v", "1.5"], capsys)
        assert code == EXIT_INVALID

    def test_constraint_out_of_range(self, capsys):
        code, _, _ = run(["capacity", "--mean-photons", "3"], capsys)
        assert code == EXIT_INVALID

    def test_unknown_fixed_input(self, capsys):
        code, _, err = run(["capacity", "--fixed-input", "nope"], capsys)
        assert code == EXIT_INVALID and "nope" in err

    def test_numerical_failure_exit_code(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("all restarts failed")

        monkeypatch.setattr(cli, "maximize_capacity", boom)
        code, _, err = run(["capacity", "--restarts", "1"], capsys)
        assert code == EXIT_NUMERIC and "numerical failure" in err


class TestConfig:
    def test_read_config(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# experiment\nrestarts = 7\nmean-photons=0.5  # inline\n\n")
        assert read_config(f) == {"restarts": "7", "mean_photons": "0.5"}

    def test_precedence(self):
        cfg = resolve("capacity", {"restarts": 2}, {"restarts": "9", "seed": "4"})
        assert cfg["restarts"] == 2 and cfg["seed"] == 4 and cfg["max_iters"] == 400

    def test_env_seed(self, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV, "11")
        assert resolve("baseline", {})["seed"] == 11
        assert resolve("baseline", {"seed": 3})["seed"] == 3

    def test_unknown_key(self, tmp_path, capsys):
        f = tmp_path / "run.cfg"
        f.write_text("restartz=3\n")
        code, _, err = run(["capacity", "--config", str(f)], capsys)
        assert code == EXIT_INVALID and "restartz" in err

    def test_config_file_drives_run(self, tmp_path, capsys):
        f = tmp_path / "run.cfg"
        f.write_text("restarts=3\nmax_iters=5\nmean_photons=1.0\n")
        out = tmp_path / "r.json"
        code, _, _ = run(["capacity", "--config", str(f), "--output", str(out)], capsys)
        assert code == EXIT_OK
        assert json.loads(out.read_text())["info"]["restarts_used"] == 3
        code, _, _ = run(["capacity", "--config", str(f), "--restarts", "1", "--output", str(out)], capsys)
        assert json.loads(out.read_text())["info"]["restarts_used"] == 1


class TestCommands:
    def test_baseline_no_vacuum(self, capsys):
        code, out, _ = run(["baseline", "--no-vacuum"], capsys)
        data = json.loads(out)
        assert code == EXIT_OK and data["capacity_bits"] == pytest.approx(1.0, abs=1e-9)
        assert data["metadata"]["command"] == "baseline"

    def test_baseline_vacuum(self, capsys):
        _, out, _ = run(["baseline"], capsys)
        assert json.loads(out)["capacity_bits"] == pytest.approx(2.0, abs=1e-6)

    def test_capacity_bell(self, tmp_path, capsys):
        out = tmp_path / "bell.json"
        code, stdout, _ = run(["capacity", "--fixed-input", "bell", "--alphabet", "4", "--restarts", "5", "--output", str(out)], capsys)
        data = json.loads(out.read_text())
        assert code == EXIT_OK and "capacity 1.58" in stdout
        assert data["capacity_bits"] == pytest.approx(math.log2(3), abs=1e-3)
        assert sum(data["histogram"]["counts"]) == len(data["restart_capacities"]) == 5

    def test_detector_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "gap.csv"
        code, _, _ = run(["detector-sweep", "--s-start", "0.8", "--s-stop", "1.0", "--s-step", "0.1", "--output", str(out)], capsys)
        lines = out.read_text().splitlines()
        assert code == EXIT_OK
        assert lines[0].startswith("# lincap ") and "seed=0" in lines[0] and "config_hash=" in lines[0]
        assert lines[1] == "s,C_ent,C_noent,delta"
        rows = [list(map(float, l.split(","))) for l in lines[2:]]
        assert [r[0] for r in rows] == [0.8, 0.9, 1.0]
        assert rows[1][3] == pytest.approx(0.27, abs=0.03)

    def test_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        argv = ["sweep", "--start", "0.0", "--stop", "0.5", "--step", "0.5", "--restarts", "1", "--max-iters", "20", "--output", str(out)]
        code, _, _ = run(argv, capsys)
        lines = out.read_text().splitlines()
        assert code == EXIT_OK
        assert lines[1] == "target,capacity_bits,feasibility_gap,restarts_used"
        assert len(lines) == 4 and lines[2].startswith("0.0,")

    def test_alphabet_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "alpha.csv"
        argv = ["alphabet-sweep", "--m-min", "4", "--m-max", "5", "--restarts", "1", "--max-iters", "10", "--output", str(out)]
        code, _, _ = run(argv, capsys)
        lines = out.read_text().splitlines()
        assert code == EXIT_OK and lines[1] == "M,capacity_bits,normalized,restarts_used"
        assert [l.split(",")[0] for l in lines[2:]] == ["4", "5"]

    def test_byte_identical_outputs(self, tmp_path, capsys):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for p in paths:
            run(["capacity", "--mean-photons", "0.5", "--restarts", "2", "--max-iters", "20", "--seed", "5", "--output", str(p)], capsys)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_hash_tracks_config(self, capsys):
        a = cli.config_hash(resolve("sweep", {"restarts": 3}))
        b = cli.config_hash(resolve("sweep", {"restarts": 4}))
        c = cli.config_hash(resolve("sweep", {"restarts": 3, "output": "x.csv"}))
        assert a != b and a == c


class TestVerify:
    def test_failing_check_sets_exit_code(self, capsys, monkeypatch):
        real = linop._permanent_stack
        monkeypatch.setattr(linop, "_permanent_stack", lambda a: 1.01 * real(a))
        monkeypatch.setattr(cli, "run_checks", lambda stretch: run_checks(names=["lift_unitarity", "canonical_capacity"]))
        code, out, err = run(["verify"], capsys)
        assert code != EXIT_OK
        assert "failing checks: lift_unitarity" in err
        assert "lift_unitarity" in out and "FAIL" in out

    def test_full_fast_table(self, capsys):
        import time

        t0 = time.perf_counter()
        code, out, _ = run(["verify", "--format", "json"], capsys)
        elapsed = time.perf_counter() - t0
        data = json.loads(out)
        failed = [c["name"] for c in data["checks"] if not c["passed"]]
        assert code == EXIT_OK and data["all_passed"], failed
        assert elapsed < 60


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lincap", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "lincap 0.1.0"
