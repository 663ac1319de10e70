#!/usr/bin/env python3
"""
Tests for the numerical kernel: jets, g-series, Taylor ODE engine, Airy, roots, quadrature
"""

import pytest

from numkernel import (
    AnchorMismatch,
    ConfigError,
    ContextMismatch,
    DensePath,
    GSeries,
    InterpolationOutOfSpan,
    Jet,
    JetOrderExhausted,
    NoSignChange,
    NodeOfChi,
    PathSegment,
    PrecisionContext,
    RiccatiCoefficients,
    RiccatiField,
    SeriesInversionFailure,
    Singularity,
    ToleranceUnreachable,
    ZeroConstantTerm,
    airy,
    airy_jet,
    ode_solve,
    quad,
    root_find,
    taylor_shift,
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


def generic_jet(ctx, order=8):
    return Jet(ctx, ctx.mpf("0.3"), [ctx.mpf(2), ctx.mpf("0.5"), ctx.mpf("-1.25"), ctx.mpf("0.75")] + [ctx.mpf(1) / (k + 2) for k in range(order - 3)])


# === PRECISION ===

def test_precision_bounds():
    print_section("Precision contexts")
    with pytest.raises(ConfigError):
        PrecisionContext(10)
    ctx = PrecisionContext(40)
    assert ctx.mp.dps == 40
    with pytest.raises(ConfigError):
        ctx.parse("not-a-number")
    assert ctx.parse("0.1") == ctx.mpf(1) / 10
    with pytest.raises(ToleranceUnreachable):
        ctx.check_tol("1e-60")
    print("✅ precision bounds enforced")


def test_contexts_are_private():
    a, b = PrecisionContext(20), PrecisionContext(50)
    assert a.mp.dps == 20 and b.mp.dps == 50
    ja = Jet.variable(a, a.mpf(1), 3)
    jb = Jet.variable(b, b.mpf(1), 3)
    with pytest.raises(ContextMismatch):
        ja + jb


# === JETS ===

def test_jet_ring_identities(ctx):
    print_section("Jet ring identities")
    a = generic_jet(ctx)
    b = Jet(ctx, a.anchor, [ctx.mpf(3)] + [ctx.mpf(k) / 7 for k in range(1, a.order + 1)])
    for lhs, rhs in [
        ((a * b) / b, a),
        (a.log().exp(), a),
        (a.sqrt() * a.sqrt(), a),
        (a.power("1.5") * a.power("-0.5"), a),
        (a * a.reciprocal(), Jet.constant(ctx, a.anchor, 1, a.order)),
    ]:
        for x, y in zip(lhs.coeffs, rhs.coeffs):
            assert close(ctx, x, y)
    for x, y in zip((a ** 3).coeffs, (a * a * a).coeffs):
        assert close(ctx, x, y)
    print("✅ division, log/exp, sqrt, power and reciprocal agree")


def test_jet_calculus(ctx):
    x = Jet.variable(ctx, ctx.mpf(1), 4)
    quartic = x ** 4
    assert list(quartic.coeffs) == [1, 4, 6, 4, 1]
    assert list(quartic.derivative().coeffs) == [4, 12, 12, 4]
    integral = quartic.integral()
    assert integral.order == 5 and integral.coeffs[0] == 0
    assert close(ctx, quartic.evaluate(ctx.mpf("1.5")), ctx.mpf("1.5") ** 4)
    shifted = quartic.shift(ctx.mpf(2))
    assert close(ctx, shifted.value, ctx.mpf(16))


def test_jet_rescale(ctx):
    square = Jet.variable(ctx, ctx.mpf(1), 2) ** 2
    u = square.rescale(2)
    assert u.anchor == 2
    assert close(ctx, u.coeffs[0], ctx.mpf(1))
    assert close(ctx, u.coeffs[1], ctx.mpf(1))
    assert close(ctx, u.coeffs[2], ctx.mpf("0.25"))


def test_jet_errors(ctx):
    a = Jet.variable(ctx, ctx.mpf(0), 3)
    with pytest.raises(ZeroConstantTerm):
        a.sqrt()
    with pytest.raises(ZeroConstantTerm):
        a.log()
    with pytest.raises(JetOrderExhausted):
        Jet.constant(ctx, 0, 1, 0).derivative()
    with pytest.raises(AnchorMismatch):
        a + Jet.variable(ctx, ctx.mpf(1), 3)
    with pytest.raises(JetOrderExhausted):
        Jet(ctx, 0, [])


def test_taylor_shift_exact(ctx):
    coeffs = [ctx.mpf(1), ctx.mpf(-2), ctx.mpf(3)]
    shifted = taylor_shift(ctx, coeffs, ctx.mpf("0.5"))
    # 1 - 2x + 3x² about 0.5: 0.75 + 1·h + 3h²
    assert close(ctx, shifted[0], ctx.mpf("0.75"))
    assert close(ctx, shifted[1], ctx.mpf(1))
    assert close(ctx, shifted[2], ctx.mpf(3))


# === G-SERIES ===

def test_gseries_inverse(ctx):
    print_section("g-series arithmetic")
    anchor = ctx.mpf("0.4")
    N = 4
    coeffs = [Jet(ctx, anchor, [ctx.mpf(m + 2)] + [ctx.mpf(1) / (m + k + 1) for k in range(N - m)]) for m in range(N + 1)]
    s = GSeries(ctx, N, coeffs)
    one = s * s.inverse()
    values = one.values()
    assert close(ctx, values[0], ctx.mpf(1))
    for v in values[1:]:
        assert abs(v) < ctx.mpf("1e-28")
    print("✅ s · s⁻¹ = 1 through order g⁴")


def test_gseries_depth_bookkeeping(ctx):
    anchor = ctx.mpf(1)
    with pytest.raises(JetOrderExhausted):
        GSeries(ctx, 1, [Jet.variable(ctx, anchor, 1)] * 3)
    zero_lead = GSeries.constant(Jet.zeros(ctx, anchor, 3), 2)
    with pytest.raises(SeriesInversionFailure):
        zero_lead.inverse()
    x = GSeries.constant(Jet.variable(ctx, anchor, 3), 3)
    d = x.dz()
    assert d.coeffs[0].is_zero()
    assert d.coeffs[1].value == 1
    assert d.coeffs[1].order == 2


# === DENSE PATH ===

def test_dense_path_lookup(ctx):
    segs = [
        PathSegment(lo=ctx.mpf(0), hi=ctx.mpf(1), anchor=ctx.mpf(0), coeffs=(ctx.mpf(1), ctx.mpf(1))),
        PathSegment(lo=ctx.mpf(1), hi=ctx.mpf(2), anchor=ctx.mpf(1), coeffs=(ctx.mpf(0), ctx.mpf(1)), inverted=True),
    ]
    path = DensePath(ctx, segs, ctx.mpf("1e-20"))
    assert path.breakpoints == [0, 1, 2]
    assert path.pole_intervals() == [(1, 2)]
    assert path.evaluate(ctx.mpf("0.5")) == ctx.mpf("1.5")
    assert path.evaluate(ctx.mpf("1.5")) == 2
    with pytest.raises(NodeOfChi):
        path.evaluate(ctx.mpf(1), direction=1)
    with pytest.raises(InterpolationOutOfSpan):
        path.evaluate(ctx.mpf(3))


# === ODE ENGINE ===

def test_ode_generic_exponential(ctx):
    print_section("Taylor ODE engine")
    path = ode_solve(lambda z, v: -v, 1, (0, 2), ctx.mpf("1e-26"), ctx)
    assert close(ctx, path.evaluate(ctx.mpf(2)), ctx.mp.exp(-2), "1e-24")
    assert close(ctx, path.evaluate(ctx.mpf("0.7")), ctx.mp.exp(ctx.mpf("-0.7")), "1e-24")
    print("✅ v' = -v reproduces exp(-z) with dense output")


def test_ode_riccati_through_pole(ctx):
    # y' = -1 - y², y(0) = 0  =>  y = -tan z, pole at π/2
    field = RiccatiField(
        lambda anchor, order, direction: RiccatiCoefficients(
            a=Jet.constant(ctx, anchor, -1, order), b=None, c=Jet.constant(ctx, anchor, -1, order)
        )
    )
    path = ode_solve(field, 0, (0, 2), ctx.mpf("1e-26"), ctx)
    assert path.pole_intervals()
    assert close(ctx, path.evaluate(ctx.mpf(2)), -ctx.mp.tan(2), "1e-22")
    assert close(ctx, path.evaluate(ctx.mpf(1)), -ctx.mp.tan(1), "1e-22")
    print("✅ pole switching carries y = -tan z through π/2")


def test_ode_leftward_with_breakpoints(ctx):
    field = RiccatiField(
        lambda anchor, order, direction: RiccatiCoefficients(
            a=None, b=Jet.constant(ctx, anchor, 1, order), c=None
        ),
        breakpoints=[ctx.mpf("0.25"), ctx.mpf("0.5")],
    )
    path = ode_solve(field, 1, (1, 0), ctx.mpf("1e-26"), ctx)
    assert ctx.mpf("0.25") in path.breakpoints and ctx.mpf("0.5") in path.breakpoints
    assert close(ctx, path.evaluate(ctx.mpf(0)), ctx.mp.exp(-1), "1e-24")


# === AIRY ===

def test_airy_against_mpmath(ctx):
    print_section("Airy functions")
    mp = ctx.mp
    for x in ["-20", "-12.5", "-3", "-0.4", "0", "1.7", "6", "15", "20"]:
        x = ctx.parse(x)
        ai, aip = airy(x, ctx)
        assert close(ctx, ai, mp.airyai(x), "1e-26")
        assert close(ctx, aip, mp.airyai(x, derivative=1), "1e-26")
    print("✅ Maclaurin and asymptotic branches agree with mpmath.airyai")


def test_airy_ode_residual(ctx):
    sigma = Jet.variable(ctx, ctx.mpf("-1.3"), 10)
    ai, aip = airy_jet(sigma)
    # Ai'' = x Ai
    second = ai.derivative().derivative()
    residual = second - (sigma.truncate(second.order) * ai.truncate(second.order))
    for c in residual.coeffs:
        assert abs(c) < ctx.mpf("1e-28")
    assert close(ctx, ai.derivative().value, aip.value)


# === ROOTS AND QUADRATURE ===

def test_root_find(ctx):
    root = root_find(lambda x: x * x - 2, (1, 2), ctx.mpf("1e-28"), ctx)
    assert close(ctx, root, ctx.mp.sqrt(2), "1e-26")
    with pytest.raises(NoSignChange):
        root_find(lambda x: x * x + 1, (-1, 1), ctx.mpf("1e-20"), ctx)


def test_quad_endpoint_singularity(ctx):
    mp = ctx.mp
    # ∫_0^1 x^(-1/2) dx = 2 ;  ∫_{-1}^{1} (1-x²)^(-1/2) dx = π
    assert close(ctx, quad(lambda x: 1 / mp.sqrt(x), 0, 1, ctx.mpf("1e-25"), ctx, Singularity.LEFT), ctx.mpf(2), "1e-24")
    arcsine = quad(lambda x: 1 / mp.sqrt(1 - x * x), -1, 1, ctx.mpf("1e-25"), ctx, Singularity.BOTH)
    assert close(ctx, arcsine, mp.pi, "1e-24")
    reversed_limits = quad(lambda x: 1 / mp.sqrt(x), 1, 0, ctx.mpf("1e-25"), ctx, Singularity.RIGHT)
    assert close(ctx, reversed_limits, ctx.mpf(-2), "1e-24")
    with pytest.raises(ConfigError):
        quad(lambda x: x, 0, 1, ctx.mpf("1e-20"), ctx, Singularity.LEFT, "-1")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
