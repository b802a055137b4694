"""Command line contract: subcommands, files, exit codes, determinism."""

import csv
import json
import os
import subprocess
import sys

import pytest

REF_ARGS = ["--vr", "1", "--va", "2", "--b", "1", "--rd", "7"]


def run_cli(*args, outdir=None, env_outdir=None):
    env = dict(os.environ)
    env.pop("SURVEILLANCE_GAME_OUTDIR", None)
    if env_outdir is not None:
        env["SURVEILLANCE_GAME_OUTDIR"] = str(env_outdir)
    cmd = [sys.executable, "-m", "surveillance_game.cli", *args]
    if outdir is not None:
        cmd += ["--out", str(outdir)]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


class TestClassify:
    def test_single_point(self):
        r = run_cli("classify", *REF_ARGS)
        assert r.returncode == 0
        assert "regime C" in r.stdout
        assert "critical point" in r.stdout

    def test_slower_evader_case(self):
        r = run_cli("classify", "--vr", "1", "--va", "0.5", "--b", "1", "--rd", "7")
        assert r.returncode == 0
        assert "regime A" in r.stdout

    def test_partial_params_rejected(self):
        r = run_cli("classify", "--vr", "1", "--va", "2")
        assert r.returncode == 1

    def test_sweep_writes_map(self, tmp_path):
        r = run_cli("classify", "--sweep", "0.5", "3", "0.1", "0.8",
                    "--sweep-n", "5", outdir=tmp_path)
        assert r.returncode == 0
        with open(tmp_path / "regime_map.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["rho_v", "rho_d", "regime"]
        assert len(rows) == 26
        labels = {row[2] for row in rows[1:]}
        assert labels <= {"A", "B", "C", "boundary", "invalid", "error"}

    def test_sweep_validation(self, tmp_path):
        r = run_cli("classify", "--sweep", "3", "0.5", "0.1", "0.8", outdir=tmp_path)
        assert r.returncode == 1


class TestPartition:
    def test_outputs_and_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            r = run_cli("partition", *REF_ARGS, "--resolution", "150", outdir=d)
            assert r.returncode == 0, r.stderr
        for name in ("arcs.csv", "partition.json", "partition.svg"):
            assert (a / name).exists()
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_document_structure(self, tmp_path):
        r = run_cli("partition", *REF_ARGS, "--resolution", "150", outdir=tmp_path)
        assert r.returncode == 0
        doc = json.loads((tmp_path / "partition.json").read_text())
        assert doc["regime"]["label"] == "C"
        assert doc["coverage"] >= 0.99
        assert doc["critical_point"]["y_c"] == pytest.approx(3.5)
        assert doc["us_segment"]["y_lo"] == pytest.approx(1.2496210676876531, abs=1e-6)
        assert doc["us_segment"]["y_hi"] == pytest.approx(3.5)

    def test_quadrant_filter(self, tmp_path):
        r = run_cli("partition", *REF_ARGS, "--resolution", "150",
                    "--quadrant", "II", outdir=tmp_path)
        assert r.returncode == 0
        with open(tmp_path / "arcs.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        assert {row["quadrant"] for row in rows} == {"II"}

    def test_resolution_changes_arc_count(self, tmp_path):
        counts = []
        for res, d in ((100, tmp_path / "lo"), (200, tmp_path / "hi")):
            run_cli("partition", *REF_ARGS, "--resolution", str(res), outdir=d)
            with open(d / "arcs.csv") as fh:
                counts.append(sum(1 for _ in fh) - 1)
        assert counts[1] > counts[0]

    def test_requires_params(self, tmp_path):
        r = run_cli("partition", outdir=tmp_path)
        assert r.returncode == 1


class TestSimulate:
    def test_scenario_outputs(self, tmp_path):
        r = run_cli("simulate", "--scenario", "fs-escape", "--resolution", "150",
                    outdir=tmp_path)
        assert r.returncode == 0, r.stderr
        assert "escape time:" in r.stdout
        assert "FS" in r.stdout
        for name in ("trace.csv", "snapshots.json", "events.csv"):
            assert (tmp_path / name).exists()
        with open(tmp_path / "trace.csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["t", "x_r", "y_r", "theta_r", "x_a", "y_a",
                          "x", "y", "u1", "u2", "v1", "v2", "region"]

    def test_reduced_init(self, tmp_path):
        r = run_cli("simulate", *REF_ARGS, "--init-reduced", "0", "5",
                    "--resolution", "150", outdir=tmp_path)
        assert r.returncode == 0, r.stderr
        assert "escape time: 2.0" in r.stdout

    def test_exactly_one_init(self, tmp_path):
        r = run_cli("simulate", *REF_ARGS, "--scenario", "us-escape",
                    "--init-reduced", "0", "5", outdir=tmp_path)
        assert r.returncode == 1
        r = run_cli("simulate", *REF_ARGS, outdir=tmp_path)
        assert r.returncode == 1

    def test_snapshot_times_clamped_to_escape(self, tmp_path):
        # the library rejects out-of-range times; the command clamps instead
        r = run_cli("simulate", *REF_ARGS, "--init-reduced", "0", "5",
                    "--resolution", "150", "--snapshots", "0,99", outdir=tmp_path)
        assert r.returncode == 0, r.stderr
        snaps = json.loads((tmp_path / "snapshots.json").read_text())
        assert snaps[-1]["time"] == pytest.approx(2.0, abs=1e-2)

    def test_env_var_outdir(self, tmp_path):
        r = run_cli("simulate", "--scenario", "us-escape", "--resolution", "150",
                    env_outdir=tmp_path)
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "trace.csv").exists()


class TestVerify:
    def test_fast_suites_pass(self, tmp_path):
        r = run_cli("verify", "--suite", "hamiltonian", "--suite", "fan",
                    "--resolution", "150", outdir=tmp_path)
        assert r.returncode == 0, r.stderr
        assert "[PASS] hamiltonian" in r.stdout
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["passed"] is True
        assert {s["suite"] for s in report["suites"]} == {"hamiltonian", "fan"}

    def test_failing_suite_exits_two(self, tmp_path):
        # a 41-node oracle grid cannot meet the accuracy gate
        r = run_cli("verify", "--suite", "oracle", "--resolution", "150",
                    "--n", "41", "--k", "8", "--dt", "0.05", outdir=tmp_path)
        assert r.returncode == 2
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["passed"] is False


class TestErrors:
    def test_unknown_subcommand(self):
        assert run_cli("frobnicate").returncode == 1

    def test_unknown_flag(self):
        assert run_cli("classify", "--bogus", "1").returncode == 1

    def test_no_subcommand(self):
        assert run_cli().returncode == 1

    def test_invalid_geometry(self, tmp_path):
        r = run_cli("partition", "--vr", "1", "--va", "2", "--b", "2",
                    "--rd", "1", outdir=tmp_path)
        assert r.returncode == 1
        assert "VALIDATION" in r.stderr or "exceed" in r.stderr
