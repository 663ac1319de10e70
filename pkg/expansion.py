"""
g-expansions of WKB and QLM log-derivatives at a point.

Both series are GSeries (powers of g = 1/λ with jet coefficients in r), so
d/dz = g·d/dr shifts a term one order up in g while consuming one
r-derivative. Comparing them coefficient by coefficient counts how many
WKB terms a QLM iterate reproduces exactly.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, List, Optional

from numkernel import ConfigError, GSeries, Jet, PrecisionContext
from potentials import PotentialModel
from wkb import _check_away_from_turning, k2_jet_r, wkb_series

logger = logging.getLogger(__name__)

MAX_SERIES_ORDER = 16
MAX_LAW_DEPTH = 3


@dataclass
class MatchReport:
    p: int
    N: int
    exact_matches: int
    per_term_reldiff: List[Any]
    anchor: Any
    degenerate: bool = False
    next_reldiff: Optional[Any] = None
    tolerance: Any = None

    @property
    def holds(self) -> bool:
        """At least 2^p exact terms, and coefficient 2^p itself differs."""
        expected = 2 ** self.p
        if self.degenerate:
            return True
        if self.exact_matches < expected:
            return False
        return self.next_reldiff is None or self.next_reldiff > self.tolerance

    def to_dict(self, ctx: PrecisionContext) -> dict:
        return {
            "p": self.p,
            "N": self.N,
            "exact_matches": self.exact_matches,
            "per_term_reldiff": [ctx.nstr(v, 6) for v in self.per_term_reldiff],
            "anchor": ctx.nstr(self.anchor, 20),
            "degenerate": self.degenerate,
            "next_reldiff": ctx.nstr(self.next_reldiff, 6) if self.next_reldiff is not None else None,
            "holds": self.holds,
        }


def _check_order(N: int):
    if N < 0 or N > MAX_SERIES_ORDER:
        raise ConfigError(f"series order must be in 0..{MAX_SERIES_ORDER}, got {N}")


def _k2_series(model: PotentialModel, E: Any, r0: Any, N: int) -> GSeries:
    """k² as a g-independent series (only the g⁰ coefficient is non-zero)."""
    ctx = model.ctx
    k2 = k2_jet_r(model, E, r0, N).map_coeffs(ctx.mpc)
    _check_away_from_turning(ctx, model, E, k2.value.real)
    return GSeries.constant(k2, N)


def wkb_g_series(model: PotentialModel, E: Any, r0: Any, N: int) -> GSeries:
    """Y_0..Y_N at r0 with Y_0 = ik."""
    _check_order(N)
    ctx = model.ctx
    terms = wkb_series(model, ctx.convert(E), ctx.convert(r0), N)
    return GSeries(ctx, N, list(terms.jets))


def qlm_g_series(model: PotentialModel, E: Any, r0: Any, p: int, N: int) -> GSeries:
    """g-expansion of the p-th iterate started from y_0 = ik.

    y_p = Σ_n L_n with L_0 = (y_{p-1}² - k²)/(2y_{p-1}) and
    L_n = -(1/(2y_{p-1})) dL_{n-1}/dz.
    """
    _check_order(N)
    if p < 1:
        raise ConfigError("qlm_g_series needs p >= 1")
    ctx = model.ctx
    E, r0 = ctx.convert(E), ctx.convert(r0)
    k2 = _k2_series(model, E, r0, N)
    y = GSeries.constant(k2.coeffs[0].sqrt() * ctx.mpc(0, 1), N)
    for q in range(1, p + 1):
        inv = (y * 2).inverse()
        term = (y * y - k2) * inv
        total = term
        idle = 0
        for n in range(1, N + 1):
            term = -(term.dz() * inv)
            if all(c.is_zero() for c in term.coeffs):
                idle += 1
                if idle >= 2:
                    break
            else:
                idle = 0
            total = total + term
        y = total
        logger.debug(f"g-series of iterate {q} at r0 = {ctx.nstr(r0, 10)} built to order {N}")
    return y


def _reldiff(ctx: PrecisionContext, a: Any, b: Any):
    floor = ctx.mpf(10) ** (-(ctx.digits // 2))
    size = max(abs(a), abs(b))
    if size < floor:
        return abs(a - b)
    return abs(a - b) / size


def match_count(qlm: GSeries, wkb: GSeries, rel_tol: Any = None, p: int = 0) -> MatchReport:
    """Leading coefficients that agree to rel_tol (absolute below 10^(-d/2))."""
    ctx = qlm.ctx
    qlm._check(wkb)
    rel_tol = ctx.convert(rel_tol) if rel_tol is not None else ctx.mpf(10) ** (6 - ctx.digits)
    N = min(qlm.order, wkb.order)
    diffs = [_reldiff(ctx, a, b) for a, b in zip(qlm.values()[: N + 1], wkb.values()[: N + 1])]
    matches = 0
    for d in diffs:
        if d > rel_tol:
            break
        matches += 1
    floor = ctx.mpf(10) ** (-(ctx.digits // 2))
    degenerate = all(abs(v) < floor for v in wkb.values()[1: N + 1])
    nxt = 2 ** p if p else None
    return MatchReport(
        p=p,
        N=N,
        exact_matches=matches,
        per_term_reldiff=diffs,
        anchor=qlm.anchor,
        degenerate=degenerate,
        next_reldiff=diffs[nxt] if nxt is not None and nxt <= N else None,
        tolerance=rel_tol,
    )


def verify_2p_law(model: PotentialModel, E: Any, r0: Any, p_max: int = 3) -> List[MatchReport]:
    """Match counts for p = 1..p_max, each at truncation N = 2^p."""
    if p_max < 1 or p_max > MAX_LAW_DEPTH:
        raise ConfigError(f"p_max must be in 1..{MAX_LAW_DEPTH}")
    ctx = model.ctx
    reports = []
    for p in range(1, p_max + 1):
        N = 2 ** p
        report = match_count(qlm_g_series(model, E, r0, p, N), wkb_g_series(model, E, r0, N), p=p)
        if report.degenerate:
            logger.warning(f"⚠️ p={p}: WKB corrections vanish at r0 = {ctx.nstr(r0, 10)}, law holds vacuously")
        elif report.holds:
            logger.info(f"✅ p={p}: {report.exact_matches} exact WKB terms (expected {N})")
        else:
            logger.error(f"❌ p={p}: {report.exact_matches} exact WKB terms, expected {N}")
        reports.append(report)
    return reports


def recursion_residual(series: GSeries, k2: Jet) -> List[Any]:
    """R_0 = Y_0² + k², R_m = Y'_{m-1} + Σ_{i=0}^{m} Y_i Y_{m-i}; all vanish for WKB coefficients."""
    Y = series.coeffs
    out = [Y[0].value ** 2 + k2.value]
    for m in range(1, series.order + 1):
        conv = sum(Y[i].value * Y[m - i].value for i in range(m + 1))
        out.append(Y[m - 1].derivative().value + conv)
    return out


def g_value(model: PotentialModel, E: Any = None):
    """The model's physical g = 1/scale(E)."""
    ctx = model.ctx
    if model.energy_dependent and E is None:
        raise ConfigError("the modified Coulomb g depends on the energy")
    return 1 / model.scale(ctx.convert(E) if E is not None else ctx.mpf(0))


def sum_at_g(series: GSeries, g: Any, order: Optional[int] = None):
    """Σ_{m<=order} g^m Y_m."""
    values = series.values()
    order = len(values) - 1 if order is None else min(order, len(values) - 1)
    return series.ctx.mp.fsum(v * g ** m for m, v in enumerate(values[: order + 1]))
