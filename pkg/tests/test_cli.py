import json
import os
import subprocess
import sys

import numpy as np
import pytest

from choimle.channel import CLONE_CHOI_NUMERATORS

# The CLI subprocesses run on the numpy backend: behavior under test is
# identical and skipping JIT warm-up keeps the suite fast.
ENV = {**os.environ, "CHOIMLE_NO_NUMBA": "1"}
ENV.pop("CHOIMLE_SEED", None)
ENV.pop("CHOIMLE_FAULT", None)


def run_cli(*args, env=None, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "choimle", *args],
        capture_output=True,
        text=True,
        env=env or ENV,
        cwd=cwd,
    )


def make_dataset(tmp_path, k=100, seed=3):
    path = tmp_path / "data.jsonl"
    result = run_cli("gen-data", "-k", str(k), "--seed", str(seed), "-o", str(path))
    assert result.returncode == 0, result.stderr
    return path


class TestTruth:
    def test_json_output(self, tmp_path):
        out = tmp_path / "truth.json"
        result = run_cli("truth", "-o", str(out), "--format", "json")
        assert result.returncode == 0
        data = json.loads(out.read_text())
        assert data["dim_in"] == 2 and data["dim_out"] == 4
        assert data["mat"][0][0] == [0.6666666666666666, 0.0]
        assert data["mat"][0][5] == [pytest.approx(1 / 3), 0.0]

    def test_csv_output(self, tmp_path):
        out = tmp_path / "truth.csv"
        result = run_cli("truth", "-o", str(out), "--format", "csv")
        assert result.returncode == 0
        rows = [line.split(",") for line in out.read_text().splitlines()]
        assert len(rows) == 16  # 8 real rows then 8 imaginary rows
        real = np.array([[float(x) for x in row] for row in rows[:8]])
        imag = np.array([[float(x) for x in row] for row in rows[8:]])
        assert np.abs(real - CLONE_CHOI_NUMERATORS / 6).max() <= 1e-15
        assert np.abs(imag).max() == 0

    def test_invalid_format_is_usage_error(self, tmp_path):
        result = run_cli("truth", "-o", str(tmp_path / "x"), "--format", "xml")
        assert result.returncode == 2


class TestGenData:
    def test_line_count_and_reproducibility(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        r1 = run_cli("gen-data", "-k", "50", "--seed", "5", "-o", str(p1))
        r2 = run_cli("gen-data", "-k", "50", "--seed", "5", "-o", str(p2))
        assert r1.returncode == 0 and r2.returncode == 0
        assert len(p1.read_text().splitlines()) == 51  # header + 50 records
        assert p1.read_bytes() == p2.read_bytes()

    def test_seed_changes_bytes(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_cli("gen-data", "-k", "50", "--seed", "5", "-o", str(p1))
        run_cli("gen-data", "-k", "50", "--seed", "6", "-o", str(p2))
        assert p1.read_bytes() != p2.read_bytes()

    def test_zero_samples_is_usage_error(self, tmp_path):
        result = run_cli("gen-data", "-k", "0", "--seed", "1", "-o", str(tmp_path / "x"))
        assert result.returncode == 2

    def test_env_seed_default(self, tmp_path):
        env = {**ENV, "CHOIMLE_SEED": "77"}
        p1 = tmp_path / "env.jsonl"
        p2 = tmp_path / "flag.jsonl"
        assert run_cli("gen-data", "-k", "20", "-o", str(p1), env=env).returncode == 0
        assert run_cli("gen-data", "-k", "20", "--seed", "77", "-o", str(p2)).returncode == 0
        assert p1.read_bytes() == p2.read_bytes()


class TestEstimate:
    def test_budget_exhaustion_contract(self, tmp_path):
        data = make_dataset(tmp_path)
        out = tmp_path / "est.json"
        result = run_cli("estimate", str(data), "-o", str(out), "--max-evals", "65")
        assert result.returncode == 0
        assert "convergence was not reached" in result.stderr
        assert json.loads(out.read_text())["diagnostics"]["evaluations"] == 65

    def test_summary_and_truth_error(self, tmp_path):
        data = make_dataset(tmp_path)
        truth_path = tmp_path / "truth.json"
        run_cli("truth", "-o", str(truth_path))
        out = tmp_path / "est.json"
        result = run_cli(
            "estimate", str(data), "-o", str(out),
            "--max-evals", "2000", "--truth", str(truth_path),
        )
        assert result.returncode == 0
        assert "error_vs_truth=" in result.stdout
        diag = json.loads(out.read_text())["diagnostics"]
        assert diag["error_vs_truth"] is not None
        assert diag["tp_residual"] >= 0
        # The result file parses back through the Choi schema.
        from choimle.channel import ChoiMatrix

        parsed = ChoiMatrix.from_json(out.read_text())
        assert parsed.mat.shape == (8, 8)

    def test_empty_dataset_fails(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        result = run_cli("estimate", str(empty), "-o", str(tmp_path / "o.json"))
        assert result.returncode == 1
        assert "no records" in result.stderr

    def test_malformed_dataset_names_defect(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(
            '{"theta":0.1,"phi":0.1,"alpha":0.1,"beta":0.1,"gamma":0.1,"delta":0.1,"a":3,"b":1}\n'
        )
        result = run_cli("estimate", str(bad), "-o", str(tmp_path / "o.json"))
        assert result.returncode == 1
        assert "'a'" in result.stderr and "line 1" in result.stderr

    def test_missing_dataset_fails(self, tmp_path):
        result = run_cli("estimate", str(tmp_path / "nope.jsonl"), "-o", str(tmp_path / "o.json"))
        assert result.returncode == 1

    def test_deterministic_output(self, tmp_path):
        data = make_dataset(tmp_path)
        o1, o2 = tmp_path / "e1.json", tmp_path / "e2.json"
        run_cli("estimate", str(data), "-o", str(o1), "--max-evals", "500")
        run_cli("estimate", str(data), "-o", str(o2), "--max-evals", "500")
        assert o1.read_bytes() == o2.read_bytes()


class TestVerify:
    def test_passes(self):
        result = run_cli("verify", "--samples", "300")
        assert result.returncode == 0
        assert "all 8 checks passed" in result.stdout

    def test_deterministic_stdout(self):
        r1 = run_cli("verify", "--samples", "300")
        r2 = run_cli("verify", "--samples", "300")
        assert r1.stdout == r2.stdout

    def test_fault_injection_detected(self):
        env = {**ENV, "CHOIMLE_FAULT": "qsign"}
        result = run_cli("verify", "--samples", "300", env=env)
        assert result.returncode == 1
        assert "failed checks" in result.stderr

    def test_rejects_bad_samples(self):
        assert run_cli("verify", "--samples", "0").returncode == 2


class TestScaling:
    def test_outputs_and_determinism(self, tmp_path):
        args = [
            "scaling", "--grid", "60,120", "--trials", "2", "--seed", "9",
            "--max-evals", "400",
        ]
        o1, o2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        r1 = run_cli(*args, "-o", str(o1))
        r2 = run_cli(*args, "-o", str(o2))
        assert r1.returncode == 0, r1.stderr
        assert "log-log slope" in r1.stdout
        assert o1.read_bytes() == o2.read_bytes()
        trials1 = tmp_path / "s1_trials.csv"
        assert trials1.exists()
        lines = o1.read_text().splitlines()
        assert lines[0] == "K,mean_error,std_error"
        assert len(lines) == 3
        assert len(trials1.read_text().splitlines()) == 5  # header + 2x2 trials

    def test_single_trial_warns(self, tmp_path):
        result = run_cli(
            "scaling", "--grid", "60", "--trials", "1", "--seed", "9",
            "--max-evals", "400", "-o", str(tmp_path / "s.csv"),
        )
        assert result.returncode == 0
        assert "warning" in result.stderr

    def test_bad_grid_is_usage_error(self, tmp_path):
        result = run_cli("scaling", "--grid", "60,abc", "-o", str(tmp_path / "s.csv"))
        assert result.returncode == 2


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed=123\nsamples=30\n")
        from_cfg = tmp_path / "cfg.jsonl"
        result = run_cli("gen-data", "--config", str(cfg), "-o", str(from_cfg))
        assert result.returncode == 0
        header = json.loads(from_cfg.read_text().splitlines()[0])
        assert header == {"k": 30, "seed": 123}

        flagged = tmp_path / "flag.jsonl"
        run_cli("gen-data", "--config", str(cfg), "--seed", "9", "-o", str(flagged))
        assert json.loads(flagged.read_text().splitlines()[0]) == {"k": 30, "seed": 9}

    def test_missing_config_is_usage_error(self, tmp_path):
        result = run_cli("gen-data", "-k", "5", "--config", str(tmp_path / "none.cfg"),
                         "-o", str(tmp_path / "x.jsonl"))
        assert result.returncode == 2


class TestUsage:
    def test_unknown_flag(self):
        assert run_cli("truth", "--bogus", "-o", "x").returncode == 2

    def test_unknown_command(self):
        assert run_cli("frobnicate").returncode == 2

    def test_help(self):
        result = run_cli("--help")
        assert result.returncode == 0
        for cmd in ("truth", "gen-data", "estimate", "verify", "scaling"):
            assert cmd in result.stdout
