"""
Semiclassical layer
WKB series, WKB quantization, the Langer wave function used as the zeroth
QLM iterate, decaying-branch boundary values and the naive ik iterate.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional, Tuple

from numkernel import (
    ConfigError,
    DensePath,
    Jet,
    NodeOfChi,
    NumericalError,
    PathSegment,
    PrecisionContext,
    Singularity,
    airy,
    airy_jet,
    quad,
    root_find,
    step_radius,
    taylor_order,
)
from potentials import (
    Centrifugal,
    NoBoundState,
    PotentialModel,
    WrongTurningStructure,
    turning_points_z,
)

logger = logging.getLogger(__name__)

MAX_WKB_TERMS = 32
SWITCH_GRID_POINTS = 24
SWITCH_REFINEMENTS = 3


class TurningPointSingularity(NumericalError):
    pass


class Region(str, Enum):
    LEFT_OF_A = "left_of_a"
    BETWEEN = "between"
    RIGHT_OF_B = "right_of_b"


@dataclass(frozen=True)
class WkbTerms:
    """Values Y_0..Y_M of the WKB coefficient functions at `anchor` (r-units)."""

    anchor: Any
    terms: Tuple[Any, ...]
    jets: Tuple[Jet, ...]

    @property
    def count(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class LangerState:
    region: Region
    chi: Any
    chi_prime: Any  # d chi / dr
    S: Any


# === WKB SERIES ===

def wkb_recursion(y0: Jet, count: int) -> List[Jet]:
    """Y_1..Y_count from Y_0 by 2Y_0 Y_m = -(Y'_{m-1} + Σ_{k=1}^{m-1} Y_k Y_{m-k}).

    Each term consumes one derivative, so Y_m carries jet order base - m.
    """
    base = y0.order
    if count > base:
        raise ConfigError(f"{count} WKB terms need a jet of order >= {count}, got {base}")
    inv = (2 * y0).reciprocal()
    terms = [y0]
    for m in range(1, count + 1):
        keep = base - m
        acc = terms[m - 1].derivative().truncate(keep)
        for k in range(1, m):
            acc = acc + terms[k].truncate(keep) * terms[m - k].truncate(keep)
        terms.append(-(acc * inv.truncate(keep)))
    return terms


def _check_away_from_turning(ctx: PrecisionContext, model: PotentialModel, E: Any, k2: Any):
    scale = max(ctx.mpf(1), abs(model.energy_term(E)))
    if abs(k2) < ctx.mpf(10) ** (-(ctx.digits // 2)) * scale:
        raise TurningPointSingularity(f"k² = {ctx.nstr(k2, 5)} vanishes at the anchor")


def k2_jet_r(model: PotentialModel, E: Any, r: Any, order: int, centrifugal: Centrifugal = Centrifugal.BARE) -> Jet:
    """k² as a jet in r (z-unit values, r-derivatives)."""
    s = model.scale(E)
    zj = model.k2_jet_z(E, s * r, order, centrifugal)
    return zj.rescale(1 / s)


def wkb_series(model: PotentialModel, E: Any, r: Any, M: int) -> WkbTerms:
    """WKB coefficients Y_0 = ik, Y_1, ..., Y_M at r, derivatives taken in r."""
    ctx = model.ctx
    if M > MAX_WKB_TERMS:
        raise ConfigError(f"at most {MAX_WKB_TERMS} WKB terms")
    E, r = ctx.convert(E), ctx.convert(r)
    k2 = k2_jet_r(model, E, r, M)
    _check_away_from_turning(ctx, model, E, k2.value)
    y0 = k2.map_coeffs(ctx.mpc).sqrt() * ctx.mpc(0, 1)
    jets = wkb_recursion(y0, M)
    return WkbTerms(anchor=r, terms=tuple(j.value for j in jets), jets=tuple(jets))


def decaying_boundary(model: PotentialModel, E: Any, z: Any, side: int, max_terms: int = 24):
    """Log-derivative of the branch decaying away from the well at a forbidden point z.

    side=+1 is a right end (y ≈ -|k|), side=-1 a left end (y ≈ +|k|). The WKB
    series in z is summed up to its smallest term.
    """
    ctx = model.ctx
    k2 = model.k2_jet_z(E, z, max_terms)
    if k2.value >= 0:
        raise TurningPointSingularity(f"z = {ctx.nstr(z, 10)} is not in a forbidden region")
    _check_away_from_turning(ctx, model, E, k2.value)
    y0 = (-k2).sqrt() * (-side)
    jets = wkb_recursion(y0, max_terms)
    total = jets[0].value
    smallest = None
    for jet in jets[1:]:
        term = jet.value
        if smallest is not None and abs(term) > smallest:
            break
        total += term
        smallest = abs(term)
        if not term or smallest < ctx.eps * abs(total):
            break
    return total


# === QUANTIZATION ===

def action_integral(model: PotentialModel, E: Any, centrifugal: Centrifugal = Centrifugal.BARE, tol: Any = None):
    """∫_a^b k dz between the turning points."""
    ctx = model.ctx
    E = ctx.convert(E)
    mp = ctx.mp
    a, b = turning_points_z(model, E, centrifugal)
    tol = tol or ctx.mpf(10) ** (6 - ctx.digits)
    integrand = lambda z: mp.sqrt(max(model.k2_z(E, z, centrifugal), 0))
    return quad(integrand, a, b, tol, ctx, Singularity.BOTH, "-0.5")


def _energy_window(model: PotentialModel, centrifugal: Centrifugal) -> Tuple[Any, Any]:
    """Energies below the well bottom and at (or above) the continuum threshold."""
    ctx = model.ctx
    mp = ctx.mp
    E_ref = model.energy_from_term(ctx.mpf(-1)) if model.energy_dependent else ctx.mpf(0)
    s = model.scale(E_ref)
    L = model.length() * s
    if model.half_line:
        grid = [L * mp.power(10, ctx.mpf(k) / 20 - 3) for k in range(121)]
    else:
        grid = [L * (ctx.mpf(k) / 10 - 10) for k in range(201)]
    bottom = min(model.v_eff_z(E_ref, z, centrifugal) for z in grid)
    limit = model.threshold()
    return bottom, limit


def wkb_energy(
    model: PotentialModel, n: int, centrifugal: Optional[Centrifugal] = None, tol: Any = None
):
    """Energy with ∫_a^b k dz = (n + 1/2)π.

    The centrifugal form defaults to the catalog's choice for the model.
    """
    ctx = model.ctx
    mp = ctx.mp
    centrifugal = Centrifugal(centrifugal or model.spec.wkb_centrifugal)
    target = (n + ctx.mpf("0.5")) * mp.pi
    tol = tol or ctx.mpf(10) ** (8 - ctx.digits)

    def f(term):
        E = model.energy_from_term(term)
        try:
            return action_integral(model, E, centrifugal) - target
        except WrongTurningStructure:
            return -target

    bottom, limit = _energy_window(model, centrifugal)
    lo = bottom + abs(bottom) * ctx.mpf("1e-6")
    step = max(abs(bottom), ctx.mpf(1))
    while f(lo) >= 0:
        lo -= step
        step *= 2
    if limit is None:
        hi = lo + step
        while f(hi) <= 0:
            step *= 2
            hi = lo + step
    else:
        # halve the distance to the threshold until the level is bracketed
        gap = abs(limit - lo)
        for _ in range(int(ctx.digits * 1.7)):
            gap /= 2
            hi = limit - gap
            if f(hi) > 0:
                break
            lo = hi
        else:
            raise NoBoundState(f"WKB spectrum of {model.id.value} has no level n = {n}")
    term = root_find(f, (lo, hi), tol, ctx)
    E = model.energy_from_term(term)
    logger.info(f"✅ WKB energy {model.id.value} n={n} ({centrifugal.value}): {ctx.nstr(E, 15)}")
    return E


# === LANGER GUIDE ===

class LangerGuide:
    """Langer wave function about the turning points a < b, in z-units.

    The Airy argument σ obeys σσ'² = Q with Q = -k² (Langer centrifugal
    term), σ > 0 in the forbidden regions. σ_a covers the span up to the end
    of the middle third of (a, b), σ_b from its start. Both maps are stored
    as dense paths of Taylor segments; the join point is where the normalized
    Wronskian of the two branches is smallest.
    """

    def __init__(self, model: PotentialModel, E: Any, n: int, span: Tuple[Any, Any], tol: Any):
        ctx = model.ctx
        self.model = model
        self.ctx = ctx
        self.E = ctx.convert(E)
        self.n = n
        self.span = (ctx.convert(span[0]), ctx.convert(span[1]))
        self.tol = ctx.check_tol(tol)
        self.order = taylor_order(ctx, self.tol)
        self.a, self.b = turning_points_z(model, self.E, Centrifugal.LANGER)
        if model.half_line and self.a <= 0:
            raise WrongTurningStructure("the Langer guide needs a genuine left turning point")
        if not (self.span[0] < self.a and self.b < self.span[1]):
            raise ConfigError("integration span must enclose both turning points")
        third = (self.b - self.a) / 3
        join_lo, join_hi = self.a + third, self.a + 2 * third
        self.sigma_a = self._march(self.a, self.span[0], join_hi)
        self.sigma_b = self._march(self.b, join_lo, self.span[1])
        # both σ paths must cover the join
        z_switch, _ = self._switch_point(join_lo, join_hi)
        self.z_switch = min(max(z_switch, join_lo), join_hi)
        self.wronskian = self._wronskian(self.z_switch)
        self.b_scale = self._branch_scale()
        logger.debug(
            f"Langer guide: a={ctx.nstr(self.a, 10)} b={ctx.nstr(self.b, 10)} "
            f"switch={ctx.nstr(self.z_switch, 10)} W={ctx.nstr(self.wronskian, 5)}"
        )

    # --- σ maps ---

    def _q_jet(self, z: Any, order: int) -> Jet:
        return -self.model.k2_jet_z(self.E, z, order, Centrifugal.LANGER)

    def _turning_series(self, zt: Any) -> Jet:
        """σ about a turning point: c·t·P^(2/3), P = (3/2) Σ ρ_j t^j/(j + 3/2), ρ = √(cQ/t)."""
        ctx = self.ctx
        order = self.order + 2
        q = self._q_jet(zt, order + 1)
        c = 1 if q[1] > 0 else -1
        rho = Jet(ctx, zt, [c * q[j + 1] for j in range(order + 1)]).sqrt()
        three_halves = ctx.mpf(3) / 2
        P = Jet(ctx, zt, [three_halves * rho[j] / (j + three_halves) for j in range(order + 1)])
        t = Jet(ctx, zt, [ctx.mpf(0), ctx.mpf(c)] + [ctx.mpf(0)] * (order - 1))
        return t * P.power(ctx.mpf(2) / 3)

    def _continued(self, z: Any, sigma_c: Any, zt: Any) -> Jet:
        """σ about z from σ(z) and σ^(3/2) growing by (3/2)∫√|Q| away from zt."""
        ctx = self.ctx
        order = self.order + 2
        q = self._q_jet(z, order)
        root = (q if q.value > 0 else -q).sqrt()
        away = 1 if z > zt else -1
        A = root.integral().truncate(order) * (away * ctx.mpf(3) / 2) + ctx.mp.power(abs(sigma_c), ctx.mpf(3) / 2)
        sign = 1 if sigma_c > 0 else -1
        return A.power(ctx.mpf(2) / 3) * sign

    def _march(self, zt: Any, lo: Any, hi: Any) -> DensePath:
        ctx = self.ctx
        series = self._turning_series(zt)
        segments: List[PathSegment] = []
        for direction, end in ((1, hi), (-1, lo)):
            if (end - zt) * direction <= 0:
                continue
            z, jet = zt, series
            while (end - z) * direction > 0:
                radius = step_radius(ctx, jet.coeffs, self.tol * (1 + abs(jet.value)))
                h = abs(end - z) if radius is None else min(radius, abs(end - z))
                z_new = end if h == abs(end - z) else z + direction * h
                seg = PathSegment(lo=min(z, z_new), hi=max(z, z_new), anchor=z, coeffs=jet.coeffs)
                segments.append(seg)
                sigma_new = seg.evaluate(z_new)
                z = z_new
                if (end - z) * direction <= 0:
                    break
                jet = self._continued(z, sigma_new, zt)
        return DensePath(ctx, segments, self.tol)

    # --- pointwise χ ---

    def _branch(self, z: Any) -> Tuple[DensePath, bool]:
        return (self.sigma_a, False) if z <= self.z_switch else (self.sigma_b, True)

    def _chi_raw(self, path: DensePath, z: Any) -> Tuple[Any, Any, Any]:
        """χ, dχ/dz and σ of one branch, before the join scaling."""
        ctx = self.ctx
        mp = ctx.mp
        jet, _ = path.jet_at(z, 2)
        s, ds, dds = jet[0], jet[1], 2 * jet[2]
        ai, aip = airy(s, ctx)
        amp = 1 / mp.sqrt(abs(ds))
        chi = ai * amp
        chi_prime = (ds * aip - dds / (2 * ds) * ai) * amp
        return chi, chi_prime, s

    def _wronskian(self, z: Any):
        """Normalized Wronskian of the two branches at z."""
        ca, dca, _ = self._chi_raw(self.sigma_a, z)
        cb, dcb, _ = self._chi_raw(self.sigma_b, z)
        return (ca * dcb - dca * cb) / self.ctx.mp.sqrt((ca * ca + dca * dca) * (cb * cb + dcb * dcb))

    def _switch_point(self, lo: Any, hi: Any) -> Tuple[Any, Any]:
        ctx = self.ctx
        wronskian = self._wronskian

        best_z, best_w = None, None
        left, right = lo, hi
        for _ in range(SWITCH_REFINEMENTS):
            points = [left + (right - left) * k / (SWITCH_GRID_POINTS - 1) for k in range(SWITCH_GRID_POINTS)]
            values = [wronskian(z) for z in points]
            mid = (lo + hi) / 2
            crossings = [
                (points[k], points[k + 1]) for k in range(len(points) - 1) if (values[k] > 0) != (values[k + 1] > 0)
            ]
            if crossings:
                cell = min(crossings, key=lambda c: abs((c[0] + c[1]) / 2 - mid))
                z = root_find(wronskian, cell, ctx.mpf(10) ** (4 - ctx.digits), ctx)
                return z, wronskian(z)
            k = min(range(len(points)), key=lambda i: abs(values[i]))
            best_z, best_w = points[k], values[k]
            step = (right - left) / (SWITCH_GRID_POINTS - 1)
            left, right = max(lo, best_z - step), min(hi, best_z + step)
        return best_z, best_w

    def _branch_scale(self):
        """Least-squares factor taking (-1)^n χ_b onto χ_a at the join."""
        ca, dca, _ = self._chi_raw(self.sigma_a, self.z_switch)
        cb, dcb, _ = self._chi_raw(self.sigma_b, self.z_switch)
        sign = -1 if self.n % 2 else 1
        cb, dcb = sign * cb, sign * dcb
        return sign * (ca * cb + dca * dcb) / (cb * cb + dcb * dcb)

    def chi(self, z: Any) -> Tuple[Any, Any]:
        """χ and dχ/dz at z."""
        path, right = self._branch(z)
        chi, chi_prime, _ = self._chi_raw(path, z)
        if right:
            return chi * self.b_scale, chi_prime * self.b_scale
        return chi, chi_prime

    def logderiv(self, z: Any):
        """y₀ = χ'/χ at z (z-units)."""
        path, _ = self._branch(z)
        jet, _ = path.jet_at(z, 2)
        s, ds, dds = jet[0], jet[1], 2 * jet[2]
        ai, aip = airy(s, self.ctx)
        den = ds * ai
        if not den:
            raise NodeOfChi(f"χ vanishes at z = {self.ctx.nstr(z, 12)}")
        return (ds * ds * aip - dds * ai / 2) / den

    def state(self, z: Any) -> LangerState:
        region = Region.LEFT_OF_A if z < self.a else Region.RIGHT_OF_B if z > self.b else Region.BETWEEN
        path, _ = self._branch(z)
        chi, chi_prime = self.chi(z)
        sigma = path.evaluate(z)
        S = self.ctx.mp.power(abs(sigma), self.ctx.mpf(3) / 2)
        return LangerState(region=region, chi=chi, chi_prime=chi_prime, S=S)

    # --- zeroth iterate ---

    def _logderiv_jet(self, sigma: Jet) -> Tuple[List[Any], bool]:
        """Taylor coefficients of y (or w = 1/y when |y| > 1) from a σ jet of order M+2."""
        order = self.order
        ds = sigma.derivative()
        dds = ds.derivative()
        ds = ds.truncate(order)
        ai, aip = airy_jet(sigma.truncate(order))
        num = ds * ds * aip - dds * ai / 2
        den = ds * ai
        if den.value and abs(num.value) <= abs(den.value):
            return list((num * den.reciprocal()).coeffs), False
        return list((den * num.reciprocal()).coeffs), True

    def guess_path(self) -> DensePath:
        """y₀ over the span as a dense path, w = 1/y stored near the nodes of χ."""
        ctx = self.ctx
        segments: List[PathSegment] = []
        pieces = ((self.sigma_a, self.span[0], self.z_switch), (self.sigma_b, self.z_switch, self.span[1]))
        for path, lo, hi in pieces:
            # σ breakpoints inside (lo, hi) plus the piece ends: the cells tile [lo, hi]
            cuts = [lo] + [z for z in path.breakpoints if lo < z < hi] + [hi]
            for left, right in zip(cuts, cuts[1:]):
                seg = path.segment_for((left + right) / 2)
                z = left
                while z < right:
                    coeffs, inverted = self._logderiv_jet(seg.jet(ctx, z, self.order + 2))
                    radius = step_radius(ctx, coeffs, self.tol * (1 + abs(coeffs[0])))
                    z_new = right if radius is None or z + radius >= right else z + radius
                    segments.append(PathSegment(lo=z, hi=z_new, anchor=z, coeffs=tuple(coeffs), inverted=inverted))
                    z = z_new
        logger.debug(f"Langer guess path: {len(segments)} segments")
        return DensePath(ctx, segments, self.tol)


def langer_guide(model: PotentialModel, E: Any, n: int, span: Tuple[Any, Any], tol: Any) -> LangerGuide:
    return LangerGuide(model, E, n, span, tol)


def langer_chi(model: PotentialModel, E: Any, n: int, r: Any, guide: LangerGuide) -> LangerState:
    """Langer state at radius r, χ' in r-units."""
    ctx = model.ctx
    s = model.scale(ctx.convert(E))
    state = guide.state(s * ctx.convert(r))
    return LangerState(region=state.region, chi=state.chi, chi_prime=state.chi_prime * s, S=state.S)


def langer_logderiv(model: PotentialModel, E: Any, n: int, r: Any, guide: LangerGuide):
    """y₀ = g·χ'(r)/χ(r) (z-units) at radius r."""
    ctx = model.ctx
    return guide.logderiv(model.scale(ctx.convert(E)) * ctx.convert(r))


# === NAIVE GUESS ===

def ik_path(
    model: PotentialModel, E: Any, span: Tuple[Any, Any], tol: Any, bridge: Optional[Any] = None
) -> Tuple[DensePath, bool]:
    """ik over the span as a dense path; turning points are bridged linearly.

    Returns the path and whether any bridge was needed.
    """
    ctx = model.ctx
    E = ctx.convert(E)
    tol = ctx.check_tol(tol)
    order = taylor_order(ctx, tol)
    lo, hi = ctx.convert(span[0]), ctx.convert(span[1])
    a, b = turning_points_z(model, E)
    width = bridge if bridge is not None else (b - a) * ctx.mpf(10) ** (-(ctx.digits // 2))
    stops = [tp for tp in (a, b) if lo < tp < hi]
    i_unit = ctx.mpc(0, 1)

    def ik_value(z):
        return i_unit * ctx.mp.sqrt(ctx.mpc(model.k2_z(E, z)))

    def ik_jet(z):
        return model.k2_jet_z(E, z, order).map_coeffs(ctx.mpc).sqrt() * i_unit

    segments: List[PathSegment] = []
    z = lo
    for end in [tp - width for tp in stops] + [hi]:
        while z < end:
            jet = ik_jet(z)
            radius = step_radius(ctx, jet.coeffs, tol * (1 + abs(jet.value)))
            z_new = end if radius is None or z + radius >= end else z + radius
            segments.append(PathSegment(lo=z, hi=z_new, anchor=z, coeffs=jet.coeffs))
            z = z_new
        if end != hi:
            far = end + 2 * width
            left, right = ik_value(end), ik_value(far)
            segments.append(PathSegment(lo=end, hi=far, anchor=end, coeffs=(left, (right - left) / (far - end))))
            z = far
    if stops:
        logger.warning(f"⚠️ ik guess bridged {len(stops)} turning point(s) of {model.id.value}")
    return DensePath(ctx, segments, tol), bool(stops)
