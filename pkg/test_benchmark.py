#!/usr/bin/env python3
"""
Tests for the benchmark runner and its acceptance gates
"""

import asyncio

import pytest

import acceptance_checks
import qlm
from acceptance_checks import (
    _within,
    check_2p_law,
    check_hulthen_exactness,
    check_quartic,
    check_wavefunction,
    evaluate_rows,
)
from benchmark_processor import CSV_COLUMNS, BenchmarkProcessor, load_benchmark_config, rows_to_csv
from numkernel import NoSignChange
from run_models import BenchmarkRow


def print_section(title):
    """Print a formatted section header"""
    print("\n" + "="*60)
    print(f"  {title}")
    print("="*60 + "\n")


# === GATES ===

def test_within_gate():
    print_section("Acceptance gates")
    assert _within("x", "2.32663", "2.32662", "0.00002").passed
    assert not _within("x", "2.3270", "2.32662", "0.00002").passed
    assert not _within("x", None, "1", "1").passed
    assert _within("x", "1.0000000001", "1", "1e-9", relative=True).passed


def test_quartic_gates_on_published_values():
    row = BenchmarkRow(
        model="quartic", n=0, e_wkb="2.326625", e_qlm1="2.39480",
        e_qlm6="2.39364401648230311560001",
    )
    results = check_quartic(row)
    assert [r.name for r in results] == ["quartic_wkb", "quartic_qlm1", "quartic_qlm6_20_digits"]
    assert all(r.passed for r in results)


def test_failed_rows_fail_their_gate():
    rows = [
        BenchmarkRow(model="harmonic", n=0, success=False, error="NoSignChange"),
        BenchmarkRow(model="harmonic", n=0, reference="1", rel_err_qlm6="1e-20", extras={"grid": 1.0000001}),
        BenchmarkRow(model="harmonic", n=1, reference="3", rel_err_qlm6="1e-20", extras={"grid": 3.5}),
        BenchmarkRow(model="harmonic", n=2, reference="5", rel_err_qlm6="1e-20"),
        BenchmarkRow(model="quartic", n=0, e_wkb="2.32662", e_qlm1="2.39475",
                     e_qlm6="2.3936440164823031156", extras={"exponent": 1.2}),
    ]
    results = {r.name: r.passed for r in evaluate_rows(rows)}
    assert results["harmonic_row"] is False
    assert results["harmonic_n0_matches_closed_form"] is True
    # the grid spectrum disagrees with the closed form
    assert results["harmonic_n1_matches_closed_form"] is False
    # no grid validation recorded
    assert results["harmonic_n2_matches_closed_form"] is False
    assert results["quartic_quadratic_convergence"] is False
    print("✅ one gate per row kind")


def test_wavefunction_gate_threshold():
    assert check_wavefunction(31.0).passed
    assert not check_wavefunction(12.5).passed
    assert not check_wavefunction(None).passed


def test_hulthen_gate_solves_the_ode(monkeypatch):
    calls = {"ode": 0}
    real_ode_solve = qlm.ode_solve

    def counting_ode_solve(*args, **kwargs):
        calls["ode"] += 1
        return real_ode_solve(*args, **kwargs)

    monkeypatch.setattr(qlm, "ode_solve", counting_ode_solve)
    result = check_hulthen_exactness([{"s": "1", "A": "4"}], 20)
    assert calls["ode"] > 0
    # s = 1, A = 4 binds n = 0 only
    (state,) = result.details["states"]
    assert state["n"] == 0 and "error" not in state
    assert abs(float(state["qlm1"]) + 2.25) < 1e-2
    assert float(state["residue_error"]) < 1e-12
    assert float(state["qlm1_error"]) < float(state["wkb_error"])
    print(f"✅ {calls['ode']} ODE solves, E_1 = {state['qlm1']}")


def test_hulthen_gate_fails_when_a_solve_fails(monkeypatch):
    def no_bracket(model, n, p, **kwargs):
        raise NoSignChange(f"no eigenvalue bracket found for {model.id.value} n={n}")

    monkeypatch.setattr(acceptance_checks, "solve_energy", no_bracket)
    result = check_hulthen_exactness([{"s": "1", "A": "12"}], 20)
    assert not result.passed
    # A = 12 binds three levels
    assert [s["n"] for s in result.details["states"]] == [0, 1, 2]
    assert all("NoSignChange" in s["error"] for s in result.details["states"])


def test_law_gate_on_oscillator():
    entry = {"id": "harmonic", "params": {"c": "1"}, "energy": "1.7", "anchors": ["0.55"], "p_max": 2}
    result = check_2p_law([entry], 34)
    assert result.passed
    assert result.details["runs"][0]["matches"] == [2, 4]


def test_law_gate_on_hulthen():
    entry = {"id": "hulthen", "params": {"A": "4", "a": "1"}, "energy": "-1.3", "anchors": ["0.9"], "p_max": 2}
    result = check_2p_law([entry], 34)
    assert result.passed
    assert result.details["runs"][0]["matches"] == [2, 4]


# === RUNNER ===

def test_default_config_lists_benchmark_rows():
    config = load_benchmark_config()
    assert [r["id"] for r in config["rows"]][:2] == ["quartic", "modified_coulomb_dirac"]
    for model_id in ("harmonic", "coulomb", "morse", "poschl_teller"):
        assert sorted(r["n"] for r in config["rows"] if r["id"] == model_id) == [0, 1, 2]
    assert config["p"] == 6


def test_processor_keeps_failed_rows():
    print_section("Benchmark runner")
    config = {"digits": 20, "p": 2, "rows": [{"id": "anharmonic", "n": 0}]}
    report = asyncio.run(BenchmarkProcessor(config, workers=2, timing=False).run(["anharmonic"]))
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row.success is False and "anharmonic" in row.error
    assert report.timing is None
    assert [a.name for a in report.acceptance] == ["anharmonic_row"]
    dump = report.dump()
    assert dump["schema"] == "riccati-qlm/1"


def test_rows_to_csv_header():
    text = rows_to_csv([BenchmarkRow(model="harmonic", n=0, e_wkb="1")])
    header, line = text.splitlines()
    assert header.split(",") == CSV_COLUMNS
    assert line.startswith("harmonic,0,1,")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
