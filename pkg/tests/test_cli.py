import json
import math

import pytest

from biheis.cli import (
    EXIT_CHECK_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    load_config,
    main,
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.output_format == "json" and cfg.parallelism == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(output_format="xml")
        with pytest.raises(ValueError):
            RunConfig(t_ratio=1.5)
        with pytest.raises(ValueError):
            RunConfig(parallelism=0)

    def test_file_then_flag_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"alpha2": 0.5, "precision": 1e-8, "seed": 7}))

        class Args:
            alpha = None
            precision = 1e-9
            fmt = "csv"
            seed = None
            t_grid = None

        cfg = load_config(str(path), Args())
        assert cfg.alpha2 == 0.5  # from file
        assert cfg.precision == 1e-9  # flag wins
        assert cfg.output_format == "csv"
        assert cfg.seed == 7

    def test_thread_cap_env(self, monkeypatch):
        monkeypatch.setenv("BIHEIS_THREADS", "2")
        assert RunConfig(parallelism=8).effective_parallelism == 2
        monkeypatch.delenv("BIHEIS_THREADS")
        assert RunConfig(parallelism=8).effective_parallelism == 8


class TestCommands:
    def test_geodesic_csv_endpoint(self, capsys):
        code, out, _ = run(
            capsys,
            "geodesic",
            "--covector", "1,0,0,0,1",
            "--t-max", "6.283185307179586",
            "--steps", "10",
            "--format", "csv",
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "t,x1,y1,x2,y2,z,rho1,rho2"
        last = [float(v) for v in lines[-1].split(",")]
        # full period: first block closes, z = pi
        assert abs(last[1]) < 1e-12 and abs(last[2]) < 1e-12
        assert abs(last[5] - math.pi) < 1e-12

    def test_byte_stable_across_runs(self, capsys):
        argv = ["distance", "--point", "0.5,0.1,0.2,0,0.3", "--alpha", "1,0.5"]
        code1, out1, _ = run(capsys, *argv)
        code2, out2, _ = run(capsys, *argv)
        assert code1 == code2 == EXIT_OK
        assert out1 == out2

    def test_cut_json(self, capsys):
        code, out, _ = run(capsys, "cut", "--point", "0,0,0,0,1", "--alpha", "1,1")
        assert code == EXIT_OK
        body = json.loads(out)
        assert body["is_cut"] and body["case"] == "I"

    def test_heat_single_t(self, capsys):
        code, out, _ = run(
            capsys, "heat", "--point", "0,0,0,0,0", "--t", "0.5", "--alpha", "1,1"
        )
        assert code == EXIT_OK
        rows = json.loads(out)
        assert abs(float(rows[0]["p"]) - 1.0 / (96 * math.pi * 0.125)) < 1e-12

    def test_heat_grid(self, capsys):
        code, out, _ = run(
            capsys,
            "heat",
            "--point", "0,0,0,0,0",
            "--t-grid", "0.5,3,1.0",
            "--alpha", "1,0.5",
        )
        assert code == EXIT_OK
        rows = json.loads(out)
        assert [float(r["t"]) for r in rows] == [1.0, 0.5, 0.25]

    def test_fit(self, capsys):
        code, out, _ = run(
            capsys, "fit", "--point", "0,0,0,0,1", "--alpha", "1,0.5"
        )
        assert code == EXIT_OK
        body = json.loads(out)
        assert abs(float(body["k_hat"]) - 3.0) < 0.02

    def test_verify_pass(self, capsys):
        code, out, _ = run(capsys, "verify", "phi")
        assert code == EXIT_OK
        assert out.count("PASS") == 2

    def test_verify_unknown_suite_usage(self, capsys):
        code, _, err = run(capsys, "verify", "nope")
        assert code == EXIT_USAGE
        assert "unknown suite" in err


class TestExitCodes:
    def test_malformed_covector(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(capsys, "geodesic", "--covector", "1,0,0", "--t-max", "1")
        assert exc.value.code == EXIT_USAGE

    def test_origin_cut_is_usage_error(self, capsys):
        code, _, err = run(capsys, "cut", "--point", "0,0,0,0,0")
        assert code == EXIT_USAGE
        assert "error:" in err

    def test_accuracy_exit_code(self, capsys):
        code, _, err = run(
            capsys, "heat", "--point", "0.3,0,0,0,1", "--t", "0.001"
        )
        assert code == 3
        assert "error:" in err

    def test_bad_config_file(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"output_format": "xml"}))
        code, _, err = run(capsys, "--config", str(path), "verify", "phi")
        assert code == EXIT_USAGE
        assert "bad configuration" in err
