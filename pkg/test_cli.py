#!/usr/bin/env python3
"""
Test script for the fraclap command line
Config loading, exit codes and report files
"""

import contextlib
import io
import json
import math
import os
import tempfile

from RunConfig import ConfigError, RunConfig, load_config
from fraclap import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main


def _write(folder, name, text):
    path = os.path.join(folder, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _run(argv):
    """(exit code, JSON lines printed on stdout)"""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    lines = [json.loads(line) for line in buf.getvalue().splitlines() if line.startswith("{")]
    return code, lines


def test_dump_defaults():
    print("Testing --dump-defaults...")
    assert main(["--dump-defaults"]) == EXIT_OK
    cfg = RunConfig()
    assert cfg.to_dict()["params.s"] == 0.5
    assert RunConfig.from_dict(cfg.to_dict()).digest() == cfg.digest()
    print("✓ Defaults dumped and round-trip through from_dict")


def test_config_errors():
    print("Testing config errors...")
    with tempfile.TemporaryDirectory() as tmp:
        bad_json = _write(tmp, "bad.json", '{"params.N": 2,\n "params.s": }\n')
        assert main(["--log-file", "", "constants", "--config", bad_json, "--out", tmp]) == EXIT_CONFIG

        unknown = _write(tmp, "unknown.json", '{\n  "params.N": 1,\n  "bogus.key": 3\n}\n')
        try:
            load_config(unknown)
            raise AssertionError("unknown key accepted")
        except ConfigError as e:
            assert e.key == "bogus.key"
            assert e.line == 3
        assert main(["--log-file", "", "constants", "--config", unknown, "--out", tmp]) == EXIT_CONFIG

        bad_s = _write(tmp, "bad_s.json", '{"params.s": 1.5}\n')
        try:
            load_config(bad_s)
            raise AssertionError("s = 1.5 accepted")
        except ConfigError as e:
            assert e.key == "params.s"
        assert main(["--log-file", "", "constants", "--s", "0", "--out", tmp]) == EXIT_CONFIG
    print("✓ Malformed JSON, unknown keys and bad values give exit code 1")


def test_constants_report():
    print("Testing constants report...")
    with tempfile.TemporaryDirectory() as tmp:
        args = ["--log-file", "", "constants", "--N", "2", "--s", "0.5", "--out", tmp]
        assert main(args) == EXIT_OK
        path = os.path.join(tmp, "constants.json")
        with open(path, "rb") as fh:
            first = fh.read()
        report = json.loads(first)
        assert report["status"] == "pass"
        assert len(report["config_digest"]) == 64
        assert abs(report["result"]["gamma_ns"] - 0.636619772368) < 1e-11
        assert main(args) == EXIT_OK
        with open(path, "rb") as fh:
            assert fh.read() == first
    print("✓ Report written with the config digest and identical across runs")


def test_verify_ball_1d():
    print("Testing verify-ball in 1D...")
    with tempfile.TemporaryDirectory() as tmp:
        code = main(["--log-file", "", "verify-ball", "--N", "1", "--s", "0.5", "--h", "0.00390625", "--out", tmp])
        with open(os.path.join(tmp, "verify-ball.json"), encoding="utf-8") as fh:
            report = json.load(fh)
        print(f"  checks {report['result']['checks']}")
        assert code == EXIT_OK
    print("✓ Oracle, solve and Neumann checks pass")


def test_moving_plane_exit_codes():
    print("Testing moving-plane exit codes...")
    with tempfile.TemporaryDirectory() as tmp:
        ellipse = _write(tmp, "ellipse.json", json.dumps({
            "params.N": 2, "domain.kind": "ellipse", "domain.center": [0.0, 0.0],
            "domain.semi_axes": [1.0, 0.5], "solve.h": 0.03125, "solve.half_width": 1.1,
        }))
        base = ["--log-file", "", "moving-plane", "--config", ellipse, "--out", tmp, "--directions", "4"]
        assert main(base) == EXIT_OK
        assert main(base + ["--expect", "symmetric"]) == EXIT_OK

        union = _write(tmp, "union.json", json.dumps({
            "params.N": 1, "domain.kind": "union", "domain.intervals": [[-2.05, -0.05], [0.05, 1.05]],
            "solve.h": 0.0078125,
        }))
        base = ["--log-file", "", "moving-plane", "--config", union, "--out", tmp]
        assert main(base) == EXIT_OK
        with open(os.path.join(tmp, "moving-plane.json"), encoding="utf-8") as fh:
            report = json.load(fh)
        assert report["result"]["union"]["components"] == 2
        assert main(base + ["--expect", "symmetric"]) == EXIT_VIOLATION
    print("✓ Ellipse symmetric about its axes; asymmetric interval union fails --expect symmetric")


def test_oracle_values():
    print("Testing oracle values on stdout...")
    with tempfile.TemporaryDirectory() as tmp:
        base = ["--log-file", "", "oracle", "--N", "1", "--s", "0.5", "--out", tmp]
        code, lines = _run(base)
        assert code == EXIT_OK
        assert abs(lines[0]["value"] - 1.0) < 1e-12
        assert lines[0]["frac_laplacian"] == 1.0
        assert abs(lines[0]["frac_normal_derivative"] + math.sqrt(2.0)) < 1e-12
        assert lines[-1]["kind"] == "oracle"

        code, lines = _run(base + ["--at", "0.5"])
        assert code == EXIT_OK
        assert abs(lines[0]["value"] - math.sqrt(0.75)) < 1e-12

        corner = ["--log-file", "", "oracle", "--N", "2", "--s", "0.5", "--out", tmp,
                  "--shape", "corner", "--radius", "0.5", "--at=-0.1,0.1"]
        code, lines = _run(corner)
        assert code == EXIT_OK
        assert abs(lines[0]["value"] - 0.1 ** 1.5 * 0.8 ** 0.5) < 1e-12
        assert abs(lines[0]["diagonal_coefficient"] - 1.0) < 1e-12

        assert _run(base + ["--at", "0.1,0.2"])[0] == EXIT_CONFIG
        assert _run(base + ["--at", "x"])[0] == EXIT_CONFIG

        code, lines = _run(["--log-file", "", "constants", "--N", "2", "--s", "0.5", "--out", tmp])
        assert code == EXIT_OK
        assert abs(lines[0]["gamma_ns"] - 2.0 / math.pi) < 1e-11
    print("✓ Ball and corner values printed as JSON; bad --at gives exit code 1")


def test_solve_2d():
    print("Testing solve in 2D...")
    with tempfile.TemporaryDirectory() as tmp:
        disc = _write(tmp, "disc.json", json.dumps({
            "params.N": 2, "params.s": 0.5, "domain.center": [0.0, 0.0],
            "solve.h": 0.0625, "solve.half_width": 1.1,
        }))
        assert main(["--log-file", "", "solve", "--config", disc, "--out", tmp]) == EXIT_OK
        with open(os.path.join(tmp, "solution.csv"), encoding="utf-8") as fh:
            rows = fh.read().splitlines()
        assert rows[0].startswith("# ")
        assert len(rows) > 2
    print(f"✓ 2D solve wrote {len(rows) - 2} CSV rows")


def test_out_csv_path():
    print("Testing --out with a .csv path...")
    with tempfile.TemporaryDirectory() as tmp:
        target = os.path.join(tmp, "bd.csv")
        code = main(["--log-file", "", "boundary-deriv", "--N", "1", "--s", "0.5", "--h", "0.015625",
                     "--out", target])
        assert code not in (EXIT_CONFIG,)
        assert os.path.isfile(target)
        assert os.path.isfile(os.path.join(tmp, "boundary-deriv.json"))
        assert not os.path.exists(os.path.join(tmp, "boundary.csv"))
    print("✓ Data file written to the named path, report next to it")


if __name__ == "__main__":
    print("=" * 60)
    print("fraclap CLI Test Suite")
    print("=" * 60)
    test_dump_defaults()
    test_config_errors()
    test_constants_report()
    test_verify_ball_1d()
    test_moving_plane_exit_codes()
    test_oracle_values()
    test_solve_2d()
    test_out_csv_path()
    print("\n" + "=" * 60)
    print("Test suite completed.")
    print("=" * 60)
