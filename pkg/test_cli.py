#!/usr/bin/env python3
"""
Tests for the command-line surface: exit codes, output records, config-file precedence
"""

import json
import logging

import mpmath
import pytest

from cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main, parse_params
from numkernel import ConfigError


def print_section(title):
    """Print a formatted section header"""
    print("\n" + "="*60)
    print(f"  {title}")
    print("="*60 + "\n")


def read_record(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


# === ARGUMENTS ===

def test_parse_params():
    assert parse_params("A=4, a=1") == {"A": "4", "a": "1"}
    assert parse_params(None) == {}
    with pytest.raises(ConfigError):
        parse_params("A4")


# === EXIT CODES ===

def test_wkb_command_writes_record(tmp_path):
    print_section("wkb command")
    out = tmp_path / "wkb.json"
    code = main(["wkb", "--potential", "harmonic", "--n", "1", "--digits", "20", "--output", str(out)])
    assert code == EXIT_OK
    record = read_record(out)
    assert record["schema"] == "riccati-qlm/1"
    assert record["state"] == {"n": 1, "l": 0}
    assert abs(mpmath.mpf(record["energies"]["wkb"]) - 3) < mpmath.mpf("1e-12")
    assert mpmath.mpf(record["reference"]) == 3
    print(f"✅ {record['energies']['wkb']}")


def test_solve_record_carries_wkb_energy(tmp_path):
    print_section("solve command")
    out = tmp_path / "solve.json"
    code = main(["solve", "--potential", "harmonic", "--n", "0", "--p", "2", "--digits", "20", "--output", str(out)])
    assert code == EXIT_OK
    record = read_record(out)
    assert abs(mpmath.mpf(record["energies"]["wkb"]) - 1) < mpmath.mpf("1e-12")
    assert sorted(record["energies"]["qlm"]) == ["1", "2"]
    assert abs(mpmath.mpf(record["energy"]) - 1) < mpmath.mpf("1e-10")
    assert set(record["diagnostics"]["mismatch"]) == {"1", "2"}
    assert "wkb" in record["diagnostics"]["relative_errors"]


def test_csv_output(tmp_path):
    out = tmp_path / "wkb.csv"
    code = main(["wkb", "--potential", "harmonic", "--digits", "20", "--format", "csv", "--output", str(out)])
    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "model,n,l,depth,energy,reference"
    assert lines[1].startswith("harmonic,0,0,wkb,")


def test_configuration_errors_exit_one(tmp_path):
    print_section("Exit codes")
    assert main(["wkb", "--potential", "anharmonic"]) == EXIT_CONFIG
    assert main(["wkb", "--potential", "harmonic", "--n", "-1"]) == EXIT_CONFIG
    assert main(["wkb", "--potential", "harmonic", "--digits", "8"]) == EXIT_CONFIG
    assert main(["wkb", "--potential", "hulthen", "--params", "B=2"]) == EXIT_CONFIG
    assert main(["wkb"]) == EXIT_CONFIG
    assert main(["wkb", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_numerical_failure_exits_two():
    # s = 1, A = 4 holds two WKB levels
    code = main(["wkb", "--potential", "hulthen", "--params", "A=4,a=1", "--n", "3", "--digits", "20"])
    assert code == EXIT_NUMERICAL


def test_series_command(tmp_path):
    out = tmp_path / "series.json"
    code = main([
        "series", "--potential", "harmonic", "--energy", "1.7", "--anchor", "0.55",
        "--p-max", "2", "--digits", "34", "--output", str(out),
    ])
    assert code == EXIT_OK
    record = read_record(out)
    assert record["holds"] is True
    assert [r["exact_matches"] for r in record["reports"]] == [2, 4]


# === CONFIG FILE ===

def test_config_file_wins_over_flags(tmp_path, caplog):
    print_section("Config precedence")
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "potential": {"id": "harmonic"},
        "state": {"n": 0},
        "digits": 20,
    }), encoding="utf-8")
    out = tmp_path / "wkb.json"
    with caplog.at_level(logging.WARNING):
        code = main(["wkb", "--potential", "harmonic", "--n", "2", "--config", str(config), "--output", str(out)])
    assert code == EXIT_OK
    assert read_record(out)["state"]["n"] == 0
    assert "state.n" in caplog.text
    print("✅ the file value was used and the override logged")


def test_config_file_rejects_unknown_keys(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"potential": {"id": "harmonic"}, "depth": 3}), encoding="utf-8")
    assert main(["wkb", "--config", str(config)]) == EXIT_CONFIG


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
