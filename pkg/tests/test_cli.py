import json
import math
import subprocess
import sys

import pytest

from gaugekit.cli import (
    EXIT_CAP_EXCEEDED,
    EXIT_CERTIFY_FAILED,
    EXIT_CHECK_FAILED,
    EXIT_DATA,
    EXIT_NO_SIGN_CHANGE,
    EXIT_OK,
    EXIT_PARTITION_FAILED,
    EXIT_USAGE,
    main,
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPartition:
    def test_constant_gauge(self, capsys):
        code, out, _ = run_cli(capsys, "partition", "--gauge", "const:0.3",
                               "--interval", "0", "1")
        assert code == EXIT_OK
        data = json.loads(out)
        assert len(data["cells"]) == 4
        assert data["domain"] == {"lo": 0.0, "hi": 1.0}

    def test_expr_gauge(self, capsys):
        code, out, _ = run_cli(capsys, "partition", "--gauge", "expr:x/2 + 0.0001",
                               "--interval", "0", "1")
        assert code == EXIT_OK
        assert json.loads(out)["cells"]

    def test_pw_gauge(self, capsys):
        code, out, _ = run_cli(capsys, "partition", "--gauge", "pw:0:0.5,0.5:0.25",
                               "--interval", "0", "1")
        assert code == EXIT_OK

    def test_negative_gauge_rejected(self, capsys):
        code, _, err = run_cli(capsys, "partition", "--gauge", "const:-1",
                               "--interval", "0", "1")
        assert code == EXIT_DATA
        assert "positive" in err

    def test_degenerate_interval_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "partition", "--gauge", "const:1",
                             "--interval", "1", "1")
        assert code == EXIT_DATA

    def test_stall_diagnostic(self, capsys):
        code, out, _ = run_cli(capsys, "partition", "--gauge", "const:1e-5",
                               "--interval", "0", "1", "--strategy", "creep",
                               "--max-cells", "10")
        assert code == EXIT_PARTITION_FAILED
        data = json.loads(out)
        assert data["status"] == "failed"
        assert data["stall"]["cells_emitted"] == 10

    def test_bad_spec_prefix(self, capsys):
        code, _, _ = run_cli(capsys, "partition", "--gauge", "0.3",
                             "--interval", "0", "1")
        assert code == EXIT_DATA


class TestCheck:
    def test_round_trip(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        code, _, _ = run_cli(capsys, "partition", "--gauge", "const:0.3",
                             "--interval", "0", "1", "--output", str(path))
        assert code == EXIT_OK
        code, out, _ = run_cli(capsys, "check", "--partition", str(path),
                               "--gauge", "const:0.3")
        assert code == EXIT_OK
        assert json.loads(out) == {"valid": True, "violations": [], "fine": True,
                                   "first_violation": None, "margin": None}

    def test_gap_detected(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        run_cli(capsys, "partition", "--gauge", "const:0.3", "--interval", "0", "1",
                "--output", str(path))
        data = json.loads(path.read_text())
        data["cells"][1]["lo"] += 1e-9  # open a gap
        path.write_text(json.dumps(data))
        code, out, _ = run_cli(capsys, "check", "--partition", str(path),
                               "--gauge", "const:0.3")
        assert code == EXIT_CHECK_FAILED
        report = json.loads(out)
        assert not report["valid"]
        assert any(v["kind"] == "contiguity" for v in report["violations"])

    def test_tag_outside_cell(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        run_cli(capsys, "partition", "--gauge", "const:0.3", "--interval", "0", "1",
                "--output", str(path))
        data = json.loads(path.read_text())
        data["cells"][0]["tag"] = 0.9
        path.write_text(json.dumps(data))
        code, out, _ = run_cli(capsys, "check", "--partition", str(path),
                               "--gauge", "const:0.3")
        assert code == EXIT_CHECK_FAILED

    def test_unfine_partition(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        run_cli(capsys, "partition", "--gauge", "const:0.3", "--interval", "0", "1",
                "--output", str(path))
        code, out, _ = run_cli(capsys, "check", "--partition", str(path),
                               "--gauge", "const:0.2")
        assert code == EXIT_CHECK_FAILED
        report = json.loads(out)
        assert report["valid"] and not report["fine"]

    def test_malformed_file(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        path.write_text("{not json")
        code, _, _ = run_cli(capsys, "check", "--partition", str(path),
                             "--gauge", "const:0.3")
        assert code == EXIT_DATA

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "check", "--partition", str(tmp_path / "no.json"),
                             "--gauge", "const:0.3")
        assert code == EXIT_DATA


class TestRoot:
    def test_sqrt2(self, capsys):
        code, out, _ = run_cli(capsys, "root", "--f", "x^2-2", "--y", "0",
                               "--interval", "1", "2", "--tol", "1e-6")
        assert code == EXIT_OK
        data = json.loads(out)
        assert abs(data["c"] - math.sqrt(2.0)) <= 1e-5
        assert data["residual_bound"] <= 1e-6

    def test_linear(self, capsys):
        code, out, _ = run_cli(capsys, "root", "--f", "x", "--y", "0.5",
                               "--interval", "0", "1")
        assert code == EXIT_OK
        assert abs(json.loads(out)["c"] - 0.5) <= 1e-5

    def test_no_sign_change(self, capsys):
        code, out, _ = run_cli(capsys, "root", "--f", "x^2+1", "--y", "0",
                               "--interval", "-1", "1")
        assert code == EXIT_NO_SIGN_CHANGE
        assert json.loads(out)["error"] == "no_sign_change"

    def test_explicit_lipschitz(self, capsys):
        code, out, _ = run_cli(capsys, "root", "--f", "x^2-2", "--y", "0",
                               "--interval", "1", "2", "--lipschitz", "4")
        assert code == EXIT_OK

    def test_parse_error(self, capsys):
        code, _, err = run_cli(capsys, "root", "--f", "x^", "--y", "0",
                               "--interval", "0", "1")
        assert code == EXIT_DATA

    def test_trace_written(self, capsys, tmp_path):
        path = tmp_path / "trace.jsonl"
        code, _, _ = run_cli(capsys, "root", "--f", "x^2-2", "--y", "0",
                             "--interval", "1", "2", "--trace", str(path))
        assert code == EXIT_OK
        lines = path.read_text().splitlines()
        assert lines
        steps = [json.loads(line) for line in lines]
        assert all(set(s) == {"s", "t"} for s in steps)
        assert all(s["s"] < s["t"] for s in steps)


class TestExtremum:
    def test_sin_max(self, capsys):
        code, out, _ = run_cli(capsys, "extremum", "--max", "--f", "sin(x)",
                               "--interval", "0", "3.141592653589793",
                               "--tol", "1e-4")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["extremum"] == "max"
        assert data["lo"] <= 1.0 <= data["hi"]

    def test_parabola_min(self, capsys):
        code, out, _ = run_cli(capsys, "extremum", "--min", "--f", "x^2",
                               "--interval", "-1", "1", "--tol", "1e-6")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["lo"] <= 0.0 <= data["hi"]
        assert abs(data["candidate"]) < 1e-2

    def test_constant(self, capsys):
        code, out, _ = run_cli(capsys, "extremum", "--max", "--f", "3",
                               "--interval", "0", "1", "--tol", "1e-3")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["lo"] == 3.0 and data["hi"] <= 3.0 + 1e-3

    def test_requires_direction(self, capsys):
        code, _, _ = run_cli(capsys, "extremum", "--f", "x", "--interval", "0", "1")
        assert code == EXIT_USAGE


class TestCertifyVerify:
    def test_no_root_round_trip(self, capsys, tmp_path):
        path = tmp_path / "cert.json"
        code, _, _ = run_cli(capsys, "certify", "--f", "x", "--no-root", "2",
                             "--interval", "0", "1", "--output", str(path))
        assert code == EXIT_OK
        data = json.loads(path.read_text())
        assert data["kind"] == "sign" and len(data["pieces"]) == 1
        code, out, _ = run_cli(capsys, "verify", "--certificate", str(path), "--f", "x")
        assert code == EXIT_OK
        assert json.loads(out) == {"verified": True}

    def test_bound_round_trip(self, capsys, tmp_path):
        path = tmp_path / "cert.json"
        code, _, _ = run_cli(capsys, "certify", "--f", "sin(x)", "--bound", "1.5",
                             "--interval", "0", "3.141592653589793",
                             "--output", str(path))
        assert code == EXIT_OK
        code, out, _ = run_cli(capsys, "verify", "--certificate", str(path),
                               "--f", "sin(x)")
        assert code == EXIT_OK

    def test_bound_certify_fails_near_peak(self, capsys):
        code, out, _ = run_cli(capsys, "certify", "--f", "sin(x)", "--bound", "0.9",
                               "--interval", "0", "3.14159")
        assert code == EXIT_CERTIFY_FAILED
        data = json.loads(out)
        assert data["error"] == "bound_violated"
        assert abs(data["x"] - math.pi / 2.0) < 0.1

    def test_no_root_stall_reports_root(self, capsys):
        code, out, _ = run_cli(capsys, "certify", "--f", "x^2-2", "--no-root", "0",
                               "--interval", "1", "2")
        assert code == EXIT_CERTIFY_FAILED
        data = json.loads(out)
        assert data["error"] == "stall"
        assert abs(data["stall_point"] - math.sqrt(2.0)) < 1e-5

    def test_tampered_certificate_rejected(self, capsys, tmp_path):
        path = tmp_path / "cert.json"
        run_cli(capsys, "certify", "--f", "x", "--no-root", "2",
                "--interval", "0", "1", "--output", str(path))
        data = json.loads(path.read_text())
        data["pieces"][0]["delta"] *= 4
        path.write_text(json.dumps(data))
        code, out, _ = run_cli(capsys, "verify", "--certificate", str(path), "--f", "x")
        assert code == EXIT_CHECK_FAILED
        assert json.loads(out) == {"verified": False}

    def test_malformed_certificate(self, capsys, tmp_path):
        path = tmp_path / "cert.json"
        path.write_text('{"kind": "sign"}')
        code, _, _ = run_cli(capsys, "verify", "--certificate", str(path), "--f", "x")
        assert code == EXIT_DATA


class TestDeterminismAndMisc:
    def test_byte_identical_outputs(self, capsys):
        fixed = [
            ("partition", "--gauge", "const:0.3", "--interval", "0", "1"),
            ("root", "--f", "x^2-2", "--y", "0", "--interval", "1", "2"),
            ("extremum", "--max", "--f", "sin(x)", "--interval", "0", "3.14",
             "--tol", "1e-3"),
            ("certify", "--f", "x", "--no-root", "2", "--interval", "0", "1"),
        ]
        for argv in fixed:
            _, out1, _ = run_cli(capsys, *argv)
            _, out2, _ = run_cli(capsys, *argv)
            assert out1 == out2

    def test_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "bogus")
        assert code == EXIT_USAGE
        code, _, _ = run_cli(capsys, "partition")
        assert code == EXIT_USAGE

    def test_env_max_steps(self, capsys, monkeypatch):
        monkeypatch.setenv("GAUGEKIT_MAX_STEPS", "10")
        code, out, _ = run_cli(capsys, "partition", "--gauge", "const:1e-5",
                               "--interval", "0", "1", "--strategy", "creep")
        assert code == EXIT_PARTITION_FAILED
        assert json.loads(out)["stall"]["cells_emitted"] == 10

    def test_env_max_steps_invalid(self, capsys, monkeypatch):
        monkeypatch.setenv("GAUGEKIT_MAX_STEPS", "zero")
        code, _, _ = run_cli(capsys, "root", "--f", "x", "--y", "0.5",
                             "--interval", "0", "1")
        assert code == EXIT_DATA

    def test_csv_format(self, capsys):
        code, out, err = run_cli(capsys, "partition", "--gauge", "const:0.5",
                                 "--interval", "0", "1", "--format", "csv")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "lo,hi,tag"
        assert "lossy" in err

    def test_human_format(self, capsys):
        code, out, _ = run_cli(capsys, "root", "--f", "x", "--y", "0.5",
                               "--interval", "0", "1", "--format", "human")
        assert code == EXIT_OK
        assert "c = " in out

    def test_subprocess_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "gaugekit", "partition", "--gauge", "const:0.5",
             "--interval", "0", "1"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["cells"]
