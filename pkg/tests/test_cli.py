"""Command-line behavior: exit codes, artifact files, reproducibility."""

import json
import subprocess
import sys

import pytest

from rectcft.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestBasicCommands:
    def test_probability(self, capsys):
        assert run_cli("probability", "--model", "percolation", "--zeta", "0.5") == 0
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(0.5, abs=1e-12)

    def test_special_eval(self, capsys):
        assert run_cli("special-eval", "--function", "eta", "--tau-imag", "1.0") == 0
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(0.76822542, abs=1e-7)

    def test_usage_error(self):
        assert run_cli("probability", "--model", "nonsense", "--zeta", "0.5") == 2

    def test_domain_error_is_internal(self, capsys):
        assert run_cli("probability", "--model", "dense", "--zeta", "1.5") == 3

    def test_expansion_check(self, capsys):
        assert run_cli("expansion-check", "--p", "13/5", "--level", "6") == 0

    def test_amplitude_series_csv(self, tmp_path):
        out = tmp_path / "series.csv"
        assert run_cli("amplitude-series", "--p", "3", "--channel", "0",
                       "--order", "4", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "order,coefficient"
        assert len(lines) == 6
        report = json.loads((tmp_path / "series.csv.json").read_text())
        assert "stamp" in report

    def test_rerun_reproducibility(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run_cli("crossing-check", "--max-label", "1", "--out", str(path))
        assert a.read_text() == b.read_text()


class TestToleranceGate:
    def test_crossing_pass(self, tmp_path):
        assert run_cli("crossing-check", "--max-label", "1",
                       "--out", str(tmp_path / "x.csv")) == 0

    def test_crossing_fail_with_absurd_tolerance(self, tmp_path):
        assert run_cli("crossing-check", "--max-label", "1", "--tolerance", "1e-30",
                       "--out", str(tmp_path / "x.csv")) == 1


class TestManifest:
    def test_manifest_roundtrip(self, tmp_path):
        manifest = {"command": "expansion-check",
                    "params": {"p": "5/2", "level": 6},
                    "output": str(tmp_path / "result.csv")}
        mpath = tmp_path / "m.json"
        mpath.write_text(json.dumps(manifest))
        assert run_cli("run", str(mpath)) == 0
        assert (tmp_path / "result.csv").exists()

    def test_bad_manifest(self, tmp_path):
        mpath = tmp_path / "m.json"
        mpath.write_text("[1, 2, 3]")
        assert run_cli("run", str(mpath)) == 2

    def test_missing_manifest(self):
        assert run_cli("run", "/nonexistent/manifest.json") in (2, 3)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rectcft.cli", "probability",
                           "--model", "dense", "--zeta", "0.25"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    val = float(proc.stdout.strip())
    assert 0.5 < val < 1.0  # wide rectangle: vertical crossing likely
