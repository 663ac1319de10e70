#!/usr/bin/env python3
"""
Tests for energy determination: defect, brackets, per-depth solves, Hulthen quantization, reports
"""

import pytest

from numkernel import ConfigError, PrecisionContext
from potentials import NoBoundState, build_model, reference_energy
from qlm import Guess, QlmSettings, run_qlm
from wkb import decaying_boundary, wkb_energy
from spectrum import (
    EigenResult,
    find_bracket,
    hulthen_energy,
    hulthen_qlm_energy,
    evaluate_defect,
    mismatch,
    solve_energy,
    wavefunction_curves,
    wkb_vs_qlm_report,
)


def print_section(title):
    """Print a formatted section header"""
    print("\n" + "="*60)
    print(f"  {title}")
    print("="*60 + "\n")


def rel(a, b):
    return abs(a - b) / abs(b)


# === HULTHEN ===

def test_hulthen_closed_form():
    print_section("Hulthen quantization")
    ctx = PrecisionContext(34)
    assert rel(hulthen_energy(1, 4, 0, ctx=ctx), ctx.mpf("-2.25")) < ctx.mpf("1e-30")
    assert rel(hulthen_energy(1, 12, 0, ctx=ctx), ctx.mpf("-30.25")) < ctx.mpf("1e-30")
    # s = 2: √ε = (3·4 - 4)/(2·2·2) = 1
    assert rel(hulthen_energy(2, 3, 1, ctx=ctx), ctx.mpf(-1)) < ctx.mpf("1e-30")
    with pytest.raises(NoBoundState):
        hulthen_energy(1, 4, 1, ctx=ctx)
    print("✅ s(√(ε+A) - √ε) = n + 1")


def test_hulthen_first_iterate_is_exact():
    ctx = PrecisionContext(34)
    for a, A, n in [(1, 4, 0), (1, 12, 0), (1, 12, 1), (2, 3, 0), (2, 3, 1)]:
        exact = hulthen_energy(a, A, n, ctx=ctx)
        for p in (1, 2, 3):
            assert rel(hulthen_qlm_energy(a, A, n, p, ctx=ctx), exact) < ctx.mpf("1e-28")
    print("✅ exact from the first iterate on")


def test_hulthen_perturbed_seeds_converge_quadratically():
    ctx = PrecisionContext(34)
    exact = hulthen_energy(1, 4, 0, ctx=ctx)
    errors = [rel(hulthen_qlm_energy(1, 4, 0, p, ctx=ctx, seeds=("1.3", "0.8")), exact) for p in range(1, 7)]
    assert errors[0] > ctx.mpf("1e-4")
    assert errors[-1] < ctx.mpf("1e-20")
    for prev, nxt in zip(errors[:4], errors[1:4]):
        assert nxt < prev
    with pytest.raises(ConfigError):
        hulthen_qlm_energy(1, 4, 0, 0, ctx=ctx)
    with pytest.raises(NoBoundState):
        hulthen_qlm_energy(1, 4, 1, 1, ctx=ctx)


# === RESULTS ===

def test_relative_errors_bookkeeping():
    ctx = PrecisionContext(20)
    result = EigenResult(
        model={"id": "harmonic"}, n=0, l=0,
        energies={1: ctx.mpf("1.1"), 2: ctx.mpf("1.01")},
        wkb_energy=ctx.mpf("1.2"), reference=ctx.mpf(1),
    )
    assert result.depth == 2 and result.energy == ctx.mpf("1.01")
    errors = result.relative_errors()
    assert set(errors) == {"wkb", "1", "2"}
    assert rel(errors["wkb"], ctx.mpf("0.2")) < 1e-15
    result.reference = None
    assert set(result.relative_errors()) == {"wkb", "1"}
    assert EigenResult(model={}, n=0, l=0).relative_errors() == {}


# === DEFECT AND BRACKETS ===

@pytest.fixture(scope="module")
def oscillator():
    ctx = PrecisionContext(20)
    return build_model("harmonic", ctx=ctx)


def test_defect_changes_sign_across_level(oscillator):
    print_section("Defect and brackets")
    settings = QlmSettings.for_context(oscillator.ctx)
    below = evaluate_defect(oscillator, "0.9", 1, Guess.LANGER, settings).value
    above = evaluate_defect(oscillator, "1.1", 1, Guess.LANGER, settings).value
    assert (below > 0) != (above > 0)
    assert abs(below) <= 1 and abs(above) <= 1
    with pytest.raises(ConfigError):
        mismatch(oscillator, 1, 0)


def test_mismatch_is_the_raw_left_defect(oscillator):
    ctx = oscillator.ctx
    iterates, _ = run_qlm(oscillator, "0.9", Guess.LANGER, 1, stop_tol=0)
    it = iterates[-1]
    z_min = it.span[0]
    # full line: y_1(z_min) against the decaying branch
    expected = it.y(z_min) - decaying_boundary(oscillator, it.E, z_min, side=-1)
    assert abs(mismatch(oscillator, "0.9", 1) - expected) <= ctx.mpf("1e-12") * (1 + abs(expected))

    coulomb = build_model("coulomb", ctx=ctx)
    iterates, _ = run_qlm(coulomb, "-0.3", Guess.LANGER, 1, stop_tol=0)
    it = iterates[-1]
    z_min = it.span[0]
    # regular origin: z_min·y_1(z_min) - (l+1)
    expected = z_min * it.y(z_min) - 1
    assert abs(mismatch(coulomb, "-0.3", 1) - expected) <= ctx.mpf("1e-12") * (1 + abs(expected))
    print("✅ mismatch reports the left-boundary residual itself")


def test_bracket_encloses_level(oscillator):
    lo, hi = find_bracket(oscillator, 1, 1)
    assert min(lo, hi) < 3 < max(lo, hi)
    assert max(lo, hi) < 5 and min(lo, hi) > 1


# === SOLVES ===

def test_oscillator_levels(oscillator):
    print_section("Per-depth energies")
    ctx = oscillator.ctx
    for n in (0, 1):
        result = solve_energy(oscillator, n, 2)
        assert sorted(result.energies) == [1, 2]
        assert result.pole_counts == {1: n, 2: n}
        assert rel(result.energy, ctx.mpf(2 * n + 1)) < ctx.mpf("1e-10")
        assert result.report is not None
        print(f"✅ n={n}: E = {ctx.nstr(result.energy, 15)}")
    with pytest.raises(ConfigError):
        solve_energy(oscillator, 0, 0)


def test_report_for_oscillator(oscillator):
    ctx = oscillator.ctx
    result = wkb_vs_qlm_report(oscillator, 0, 2)
    assert result.reference == 1
    errors = result.relative_errors()
    assert errors["wkb"] < ctx.mpf("1e-10")
    assert errors["2"] < ctx.mpf("1e-10")


# (model, params, n, WKB energy or None when WKB is only approximate)
CATALOG_LEVELS = [
    ("harmonic", {"c": "1"}, 2, "5"),
    ("coulomb", {"Z": "1"}, 0, "-0.25"),
    ("coulomb", {"Z": "1"}, 1, "-0.0625"),
    # s(√(ε+A) - √ε) = n + 1/2
    ("hulthen", {"A": "4", "a": "1"}, 0, "-14.0625"),
    ("hulthen", {"A": "12", "a": "1"}, 1, "-10.5625"),
    ("morse", {"D": "16", "a": "1"}, 0, "-12.25"),
    ("poschl_teller", {"V0": "20", "a": "1"}, 0, None),
]


@pytest.mark.parametrize("model_id,params,n,wkb", CATALOG_LEVELS)
def test_catalog_levels_at_low_precision(model_id, params, n, wkb):
    ctx = PrecisionContext(20)
    model = build_model(model_id, params, ctx=ctx)
    exact = reference_energy(model, n)
    E_wkb = wkb_energy(model, n)
    if wkb is not None:
        assert rel(E_wkb, ctx.parse(wkb)) < ctx.mpf("1e-10")
    else:
        assert rel(E_wkb, exact) < ctx.mpf("0.05")
    result = solve_energy(model, n, 4)
    assert result.pole_counts == {q: n for q in range(1, 5)}
    assert rel(result.energy, exact) < ctx.mpf("1e-12")
    print(f"✅ {model_id} n={n}: E_WKB = {ctx.nstr(E_wkb, 10)}, E_4 = {ctx.nstr(result.energy, 15)}")


def test_hulthen_bracket_survives_the_origin():
    ctx = PrecisionContext(20)
    hulthen = build_model("hulthen", {"A": "4", "a": "1"}, ctx=ctx)
    lo, hi = find_bracket(hulthen, 0, 1)
    assert min(lo, hi) < -2.25 < max(lo, hi)


@pytest.mark.slow
def test_exactly_solvable_models_agree_with_closed_forms():
    ctx = PrecisionContext(24)
    cases = [
        ("hulthen", {"A": "4", "a": "1"}, 0),
        ("morse", {"D": "16", "a": "1"}, 0),
        ("morse", {"D": "16", "a": "1"}, 1),
        ("poschl_teller", {"V0": "20", "a": "1"}, 0),
        ("coulomb", {"Z": "1"}, 0),
    ]
    for model_id, params, n in cases:
        model = build_model(model_id, params, ctx=ctx)
        result = solve_energy(model, n, 4)
        assert rel(result.energy, reference_energy(model, n)) < ctx.mpf("1e-14"), model_id


@pytest.mark.slow
def test_quartic_wkb_and_first_iterate():
    print_section("Quartic oscillator")
    ctx = PrecisionContext(30)
    quartic = build_model("quartic", ctx=ctx)
    result = wkb_vs_qlm_report(quartic, 0, 6)
    assert abs(result.wkb_energy - ctx.mpf("2.32662")) < ctx.mpf("2e-5")
    assert abs(result.energies[1] - ctx.mpf("2.39475")) < ctx.mpf("5e-4")
    errors = result.relative_errors()
    assert abs(float(errors["wkb"]) - 0.028) < 0.002
    assert rel(result.energy, ctx.mpf("2.3936440164823031156")) < ctx.mpf("1e-15")
    settings = QlmSettings.for_context(ctx)
    below = evaluate_defect(quartic, "2.0", 6, Guess.LANGER, settings).value
    above = evaluate_defect(quartic, "2.8", 6, Guess.LANGER, settings).value
    assert (below > 0) != (above > 0)
    print(f"✅ E_WKB = {ctx.nstr(result.wkb_energy, 8)}, E_1 = {ctx.nstr(result.energies[1], 8)}, E_6 = {ctx.nstr(result.energy, 20)}")


@pytest.mark.slow
def test_modified_coulomb_error_ladder():
    ctx = PrecisionContext(34)
    model = build_model("modified_coulomb_dirac", ctx=ctx)
    result = wkb_vs_qlm_report(model, 0, 4)
    wkb_error = abs(result.wkb_energy - result.energy) / result.energy
    qlm1_error = abs(result.energies[1] - result.energy) / result.energy
    assert qlm1_error * 100 < wkb_error


@pytest.mark.slow
def test_quartic_wavefunction_bulk_ratio():
    ctx = PrecisionContext(34)
    quartic = build_model("quartic", ctx=ctx)
    curves = wavefunction_curves(quartic, 0, p=6, exact_depth=10, points=200)
    assert len(curves.r) == 200
    assert curves.bulk_ratio is not None and curves.bulk_ratio >= 30
    rows = curves.rows(ctx)
    assert set(rows[0]) == {"r", "chi_exact", "chi_wkb", "chi_qlm1", "log10_err_wkb", "log10_err_qlm1"}


def test_wavefunction_grid_validation(oscillator):
    with pytest.raises(ConfigError):
        wavefunction_curves(oscillator, 0, points=1, energy=1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
