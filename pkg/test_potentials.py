#!/usr/bin/env python3
"""
Tests for the potential catalog: k², jets, turning points, cutoffs, origin series, references
"""

import pytest

from numkernel import ConfigError, PrecisionContext
from potentials import (
    DomainViolation,
    ModelId,
    NoBoundState,
    NotBound,
    approximate_energy,
    asymptotic_start,
    build_model,
    energy_term,
    grid_spectrum,
    k_squared,
    left_start,
    origin_series,
    reference_energy,
    regular_logderiv,
    turning_points,
    turning_points_z,
    v_jet,
    z_scale,
)


def print_section(title):
    """Print a formatted section header"""
    print("\n" + "="*60)
    print(f"  {title}")
    print("="*60 + "\n")


@pytest.fixture
def ctx():
    return PrecisionContext(34)


def close(ctx, a, b, tol="1e-28"):
    return abs(a - b) <= ctx.mpf(tol) * max(1, abs(b))


# === CATALOG ===

def test_build_model_validation(ctx):
    print_section("Catalog validation")
    with pytest.raises(ConfigError):
        build_model("anharmonic", ctx=ctx)
    with pytest.raises(ConfigError):
        build_model("hulthen", {"B": "1"}, ctx=ctx)
    with pytest.raises(ConfigError):
        build_model("harmonic", l=1, ctx=ctx)
    with pytest.raises(ConfigError):
        build_model("coulomb", l=-1, ctx=ctx)
    with pytest.raises(ConfigError):
        build_model("harmonic", units={"m": "-1"}, ctx=ctx)
    model = build_model("hulthen", {"A": "12"}, ctx=ctx)
    assert model.params["A"] == 12 and model.params["a"] == 1
    assert model.id == ModelId.HULTHEN and model.half_line
    print("✅ unknown ids, parameters and illegal l rejected")


def test_with_context_reparses(ctx):
    model = build_model("morse", {"D": "9"}, ctx=ctx)
    wide = model.with_context(PrecisionContext(60))
    assert wide.ctx.digits == 60
    assert wide.params["D"] == 9
    assert wide.describe()["params"] == {"D": "9", "a": "1"}


# === POINTWISE ===

def test_k_squared_examples(ctx):
    print_section("k² and potential jets")
    harmonic = build_model("harmonic", ctx=ctx)
    assert close(ctx, k_squared(harmonic, 3, 1), ctx.mpf(2))
    quartic = build_model("quartic", ctx=ctx)
    # m = 1 puts z = √2 r, and k² = E - r⁴ in z-units
    assert close(ctx, quartic.units.lam, ctx.mp.sqrt(2))
    assert close(ctx, k_squared(quartic, 2, 1), ctx.mpf(1))
    coulomb = build_model("coulomb", l=1, ctx=ctx)
    # -1/4 + 1/2 - 2/4
    assert close(ctx, k_squared(coulomb, ctx.mpf("-0.25"), 2), ctx.mpf("-0.25"))
    with pytest.raises(DomainViolation):
        k_squared(coulomb, -1, 0)
    print("✅ k² matches hand values")


def test_hulthen_potential_near_origin(ctx):
    hulthen = build_model("hulthen", {"A": "4", "a": "1"}, ctx=ctx)
    # V = -A/(e^r - 1) = -A/r + A/2 - A r/12 + ...
    for r in ["1e-10", "1e-40"]:
        r = ctx.parse(r)
        assert close(ctx, k_squared(hulthen, -1, r), -1 + 4 / r - 2 + r / 3, "1e-20")
    r = ctx.parse("1e-30")
    jet = v_jet(hulthen, -1, r, 2)
    assert close(ctx, jet[0], -4 / r + 2, "1e-20")
    assert close(ctx, jet[1], 4 / (r * r), "1e-20")


def test_v_jet(ctx):
    quartic = build_model("quartic", ctx=ctx)
    jet = v_jet(quartic, 1, 1, 4)
    assert jet.anchor == 1
    for got, want in zip(jet.coeffs, [1, 4, 6, 4, 1]):
        assert close(ctx, got, ctx.mpf(want))
    coulomb = build_model("coulomb", ctx=ctx)
    jet = v_jet(coulomb, -1, 2, 1)
    assert close(ctx, jet[0], ctx.mpf("-0.5"))
    assert close(ctx, jet[1], ctx.mpf("0.25"))
    with pytest.raises(ConfigError):
        v_jet(coulomb, -1, 2, 65)


def test_energy_dependent_units(ctx):
    model = build_model("modified_coulomb_dirac", {"alpha": "0.01"}, ctx=ctx)
    alpha = ctx.mpf("0.01")
    for n in range(3):
        E = approximate_energy(model, n)
        N = n + 1
        # the hydrogenic seed sits exactly at term = -1/(16 N²)
        assert close(ctx, energy_term(model, E), -ctx.mpf(1) / (16 * N * N), "1e-26")
        assert close(ctx, model.energy_from_term(energy_term(model, E)), E, "1e-26")
        assert close(ctx, z_scale(model, E), alpha * E)
    harmonic = build_model("harmonic", ctx=ctx)
    assert energy_term(harmonic, 5) == 5
    assert z_scale(harmonic, 5) == harmonic.units.lam


# === TURNING POINTS AND CUTOFFS ===

def test_turning_points(ctx):
    print_section("Turning points and cutoffs")
    harmonic = build_model("harmonic", ctx=ctx)
    a, b = turning_points_z(harmonic, 9)
    assert close(ctx, a, ctx.mpf(-3), "1e-25")
    assert close(ctx, b, ctx.mpf(3), "1e-25")
    quartic = build_model("quartic", ctx=ctx)
    a, b = turning_points(quartic, 1)
    assert a == 0
    assert close(ctx, b, ctx.mpf(1), "1e-25")
    print("✅ harmonic (-3, 3), quartic (0, 1)")


def test_asymptotic_cutoffs(ctx):
    harmonic = build_model("harmonic", ctx=ctx)
    _, b = turning_points_z(harmonic, 1)
    assert asymptotic_start(harmonic, 1, 1) == b
    far = asymptotic_start(harmonic, 1, ctx.mpf("1e-20"))
    near = asymptotic_start(harmonic, 1, ctx.mpf("1e-5"))
    assert far > near > b
    assert left_start(harmonic, 1, ctx.mpf("1e-20")) < -b

    quartic = build_model("quartic", ctx=ctx)
    with pytest.raises(ConfigError):
        asymptotic_start(quartic, 1, ctx.mpf("1e-10"), side=-1)
    assert left_start(quartic, 1, ctx.mpf("1e-10")) > 0

    hulthen = build_model("hulthen", ctx=ctx)
    with pytest.raises(NotBound):
        asymptotic_start(hulthen, "0.5", ctx.mpf("1e-10"))
    assert asymptotic_start(hulthen, "-2.25", ctx.mpf("1e-10")) > turning_points_z(hulthen, "-2.25")[1]


# === ORIGIN SERIES ===

def test_regular_logderiv_coulomb(ctx):
    print_section("Regular solution at the origin")
    coulomb = build_model("coulomb", ctx=ctx)
    z = ctx.mpf("0.01")
    # ground state χ = z·exp(-z/2)
    assert close(ctx, regular_logderiv(coulomb, ctx.mpf("-0.25"), z), 1 / z - ctx.mpf("0.5"), "1e-26")
    coeffs = origin_series(coulomb, ctx.mpf("-0.25"), z)
    assert coeffs[0] == 1
    assert close(ctx, coeffs[1], ctx.mpf("-0.5"))
    with pytest.raises(ConfigError):
        origin_series(build_model("harmonic", ctx=ctx), 1, z)
    print("✅ Frobenius series reproduces z·exp(-z/2)")


# === REFERENCES ===

def test_reference_energies(ctx):
    print_section("Closed-form references")
    assert close(ctx, reference_energy(build_model("harmonic", ctx=ctx), 2), ctx.mpf(5))
    assert close(ctx, reference_energy(build_model("coulomb", l=1, ctx=ctx), 0), ctx.mpf("-0.0625"))
    hulthen = build_model("hulthen", ctx=ctx)
    assert close(ctx, reference_energy(hulthen, 0), ctx.mpf("-2.25"))
    with pytest.raises(NoBoundState):
        reference_energy(hulthen, 1)
    morse = build_model("morse", ctx=ctx)
    assert close(ctx, reference_energy(morse, 0), ctx.mpf("-12.25"))
    assert close(ctx, reference_energy(morse, 3), ctx.mpf("-0.25"))
    with pytest.raises(NoBoundState):
        reference_energy(morse, 4)
    assert reference_energy(build_model("quartic", ctx=ctx), 0) is None
    with pytest.raises(ConfigError):
        reference_energy(hulthen, -1)
    print("✅ harmonic, Coulomb, Hulthen and Morse closed forms")


def test_grid_oracle_agrees():
    ctx = PrecisionContext(20)
    harmonic = build_model("harmonic", ctx=ctx)
    for n, e in enumerate(grid_spectrum(harmonic, 3)):
        assert abs(e - (2 * n + 1)) < 1e-6
    hulthen = build_model("hulthen", {"A": "4"}, ctx=ctx)
    assert abs(grid_spectrum(hulthen, 1)[0] + 2.25) < 5e-2
    with pytest.raises(ConfigError):
        grid_spectrum(build_model("modified_coulomb_dirac", ctx=ctx), 1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
