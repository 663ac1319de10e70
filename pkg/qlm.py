"""
Quasilinearization engine
Iterates y_p of the linearized Riccati recurrence dy_p/dz = y_{p-1}² - 2 y_p y_{p-1} - k²,
integrated right to left from y_p(z0) = ik(z0), with the Langer guess as y_0.
"""

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from numkernel import (
    ConfigError,
    DensePath,
    Jet,
    NumericalError,
    PathSegment,
    PrecisionContext,
    RiccatiCoefficients,
    RiccatiField,
    Singularity,
    ode_solve,
    quad,
    root_find,
)
from potentials import LeftBoundary, PotentialModel, asymptotic_start, left_start, turning_points_z
from wkb import LangerGuide, ik_path

load_dotenv()

logger = logging.getLogger(__name__)

# === CONFIG ===
ODE_TOL = os.getenv("QLM_ODE_TOL")  # default: 10^(6-d)
STOP_TOL = os.getenv("QLM_STOP_TOL")  # default: 10^(10-d)
TAIL_TOL = os.getenv("QLM_TAIL_TOL", "1e-30")
LEFT_TAIL_TOL = os.getenv("QLM_LEFT_TAIL_TOL")  # default: 1/(2 d ln 10)
R_MIN_FRACTION = "1e-3"
EXCLUSION_RADIUS = "1e-2"


class Diverged(NumericalError):
    pass


class SpanMismatch(NumericalError):
    pass


class AmbiguousPole(NumericalError):
    pass


class Guess(str, Enum):
    LANGER = "langer"
    IK = "ik"


@dataclass(frozen=True)
class QlmSettings:
    """Tolerances of one QLM run; all values at the model's precision."""

    ode_tol: Any
    stop_tol: Any
    tail_tol: Any
    left_tail_tol: Any
    exclusion_radius: Any
    r_min_fraction: Any
    max_steps: int = 20000

    @classmethod
    def for_context(cls, ctx: PrecisionContext, **overrides: Any) -> "QlmSettings":
        d = ctx.digits
        ten = ctx.mpf(10)
        values = {
            "ode_tol": ctx.mpf(ODE_TOL) if ODE_TOL else ten ** (6 - d),
            "stop_tol": ctx.mpf(STOP_TOL) if STOP_TOL else ten ** (10 - d),
            "tail_tol": ctx.mpf(TAIL_TOL),
            "left_tail_tol": ctx.mpf(LEFT_TAIL_TOL) if LEFT_TAIL_TOL else 1 / (2 * d * ctx.mp.ln10),
            "exclusion_radius": ctx.mpf(EXCLUSION_RADIUS),
            "r_min_fraction": ctx.mpf(R_MIN_FRACTION),
        }
        for name, value in overrides.items():
            if value is None:
                continue
            values[name] = value if name == "max_steps" else ctx.convert(value)
        return cls(**values)

    @property
    def noise_floor(self):
        return max(self.stop_tol, 1000 * self.ode_tol)


@dataclass(frozen=True, eq=False)
class Iterate:
    """One QLM iterate y_p over [z_min, z0] (z-units) at a fixed energy."""

    p: int
    E: Any
    path: DensePath
    pole_locations: Tuple[Any, ...]
    boundary: Any
    guess: Guess
    model: PotentialModel
    flags: Tuple[str, ...] = ()

    @property
    def span(self) -> Tuple[Any, Any]:
        return self.path.span

    def y(self, z: Any):
        if z == self.span[1]:
            return self.boundary
        return self.path.evaluate(z)

    @property
    def left_raw(self) -> Tuple[Any, bool]:
        """Stored variable (y or w) at the left end."""
        return self.path.evaluate_raw(self.span[0])


@dataclass
class ConvergenceReport:
    norms: List[Any] = field(default_factory=list)
    ratios: List[Any] = field(default_factory=list)
    exponent: Optional[float] = None
    quadratic: bool = False
    converged: bool = False

    def to_dict(self, ctx: PrecisionContext) -> dict:
        return {
            "norms": [ctx.nstr(v, 6) for v in self.norms],
            "ratios": [ctx.nstr(v, 6) for v in self.ratios],
            "exponent": self.exponent,
            "quadratic": self.quadratic,
            "converged": self.converged,
        }


# === SPAN ===

def integration_span(model: PotentialModel, E: Any, settings: QlmSettings) -> Tuple[Any, Any]:
    """(z_min, z0): left end from the origin series or the left tail, z0 from the right tail."""
    z0 = asymptotic_start(model, E, settings.tail_tol)
    tail = settings.left_tail_tol
    z_min = left_start(model, E, tail, settings.r_min_fraction)
    return z_min, z0


def stable_left_edge(model: PotentialModel, E: Any) -> Optional[Any]:
    """Left turning point when the left end is a decaying tail, else None.

    Right-to-left integration amplifies errors left of this point, so norms
    and node counts stop there.
    """
    if model.spec.left_boundary == LeftBoundary.REGULAR_ORIGIN:
        return None
    a, _ = turning_points_z(model, E)
    return a


def boundary_value(model: PotentialModel, E: Any, z0: Any):
    """ik(z0), real and non-positive in the forbidden region."""
    k2 = model.k2_z(E, z0)
    return -model.ctx.mp.sqrt(-k2) if k2 <= 0 else model.ctx.mpc(0, 1) * model.ctx.mp.sqrt(k2)


# === POLES ===

def _w_runs(path: DensePath) -> List[List[PathSegment]]:
    runs: List[List[PathSegment]] = []
    current: List[PathSegment] = []
    for seg in path.segments:
        if seg.inverted:
            current.append(seg)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def _sign(x: Any) -> int:
    x = x.real if hasattr(x, "real") else x
    return (x > 0) - (x < 0)


def find_poles(path: DensePath, tol: Any) -> List[Any]:
    """Zeros of w on the inverted segments: the simple poles of y.

    Complex paths (the ik guess) have no real poles to count.
    """
    ctx = path.ctx
    if not path.is_real():
        return []
    raw = lambda z: path.evaluate_raw(z)[0]
    poles = []
    for run in _w_runs(path):
        samples = [run[0].lo]
        for seg in run:
            samples.extend(seg.lo + (seg.hi - seg.lo) * k / 8 for k in range(1, 9))
        last = None
        closest = None
        before = len(poles)
        for z in samples:
            value = raw(z)
            closest = abs(value) if closest is None else min(closest, abs(value))
            s = _sign(value)
            if s == 0:
                if z not in path.span:
                    poles.append(z)
                last = None
                continue
            if last is not None and s != last[1]:
                poles.append(root_find(raw, (last[0], z), tol, ctx))
            last = (z, s)
        if len(poles) == before and closest < 10 * tol:
            raise AmbiguousPole(f"w touches zero near z = {ctx.nstr(run[0].lo, 10)} without crossing")
    return sorted(poles)


# === STEP ===

def _make_iterate(model, E, p, path, boundary, guess, flags, tol) -> Iterate:
    return Iterate(
        p=p,
        E=E,
        path=path,
        pole_locations=tuple(find_poles(path, tol)),
        boundary=boundary,
        guess=guess,
        model=model,
        flags=tuple(flags),
    )


def qlm_step(model: PotentialModel, E: Any, prev: Iterate, settings: QlmSettings) -> Iterate:
    """Next iterate from the linearization about prev, on prev's mesh.

    Where prev stores w = 1/y the linearization is taken of the inverse flow
    w' = 1 + k²w², so node positions are free to move between iterates.
    """
    ctx = model.ctx
    prev_path = prev.path

    def coefficients(anchor, order, direction):
        k2 = model.k2_jet_z(E, anchor, order)
        jet, inverted = prev_path.jet_at(anchor, order, direction)
        if inverted:
            return RiccatiCoefficients(a=1 - k2 * jet * jet, b=2 * k2 * jet, c=None, inverted=True)
        return RiccatiCoefficients(a=jet * jet - k2, b=-2 * jet, c=None, inverted=False)

    z_min, z0 = prev.span
    field = RiccatiField(coefficients, breakpoints=prev_path.breakpoints, switchable=True)
    path = ode_solve(field, prev.boundary, (z0, z_min), settings.ode_tol, ctx, max_steps=settings.max_steps)
    return _make_iterate(model, E, prev.p + 1, path, prev.boundary, prev.guess, prev.flags, settings.ode_tol)


def zeroth_iterate(
    model: PotentialModel, E: Any, guess: Guess, settings: QlmSettings, n: int = 0,
    span: Optional[Tuple[Any, Any]] = None,
) -> Iterate:
    ctx = model.ctx
    E = ctx.convert(E)
    z_min, z0 = span or integration_span(model, E, settings)
    boundary = boundary_value(model, E, z0)
    flags: List[str] = []
    if Guess(guess) == Guess.LANGER:
        path = LangerGuide(model, E, n, (z_min, z0), settings.ode_tol).guess_path()
    else:
        path, bridged = ik_path(model, E, (z_min, z0), settings.ode_tol)
        flags.append("ik_guess")
        if bridged:
            flags.append("bridged")
    return _make_iterate(model, E, 0, path, boundary, Guess(guess), flags, settings.ode_tol)


# === CLOSED FORM ===

def first_iterate_closed(model: PotentialModel, E: Any, z: Any, z0: Any, tol: Any = None):
    """y₁(z) = ik(z) - i∫_{z0}^z k'(s) exp(-2i∫_s^z k) ds for the guess y₀ = ik."""
    ctx = model.ctx
    mp = ctx.mp
    E, z, z0 = ctx.convert(E), ctx.convert(z), ctx.convert(z0)
    tol = tol or ctx.mpf(10) ** (6 - ctx.digits)
    i = ctx.mpc(0, 1)
    if z == z0:
        return boundary_value(model, E, z0)

    def k(t):
        return mp.sqrt(ctx.mpc(model.k2_z(E, t)))

    def dk(t):
        jet = model.k2_jet_z(E, t, 1)
        return jet[1] / (2 * mp.sqrt(ctx.mpc(jet[0])))

    a, b = turning_points_z(model, E)
    cuts = sorted(tp for tp in (a, b) if min(z, z0) < tp < max(z, z0))

    def integrate(f, lo, hi):
        points = [lo] + [c for c in cuts if min(lo, hi) < c < max(lo, hi)][:: 1 if hi > lo else -1] + [hi]
        total = 0
        for left, right in zip(points, points[1:]):
            sing = Singularity.NONE
            if left in cuts and right in cuts:
                sing = Singularity.BOTH
            elif left in cuts:
                sing = Singularity.LEFT if right > left else Singularity.RIGHT
            elif right in cuts:
                sing = Singularity.RIGHT if right > left else Singularity.LEFT
            total += quad(f, left, right, tol, ctx, sing, "-0.5")
        return total

    phase_z = integrate(k, z0, z)
    inner = lambda s: dk(s) * mp.exp(-2 * i * (phase_z - integrate(k, z0, s)))
    return i * k(z) - i * integrate(inner, z0, z)



def _segment_integral(ctx: PrecisionContext, seg: PathSegment, lo: Any, hi: Any, tol: Any):
    """∫_lo^hi y over part of one segment: exact on y segments, quadrature of 1/w on inverted ones."""
    if lo == hi:
        return ctx.mpf(0)
    if seg.inverted:
        return quad(lambda t: 1 / seg.evaluate(t), lo, hi, tol, ctx)

    def antiderivative(z):
        h = z - seg.anchor
        acc = 0
        for k in range(len(seg.coeffs) - 1, -1, -1):
            acc = (acc + seg.coeffs[k] / (k + 1)) * h
        return acc

    return antiderivative(hi) - antiderivative(lo)


def iterate_closed(model: PotentialModel, E: Any, prev: Iterate, z: Any, z0: Optional[Any] = None, tol: Any = None):
    """y_p(z) from y_{p-1} = prev by the integral solution of the linear step.

    With B(u, v) = 2∫_u^v y_{p-1},
    y_p(z) = ik(z0)·e^{B(z, z0)} - ∫_z^{z0} (y_{p-1}² - k²)(s) e^{B(z, s)} ds.
    Inverted segments of prev enter through y = 1/w, so on them this is the
    y-linearization even where the solver steps in w.
    """
    ctx = model.ctx
    mp = ctx.mp
    E, z = ctx.convert(E), ctx.convert(z)
    z0 = prev.span[1] if z0 is None else ctx.convert(z0)
    tol = tol or ctx.mpf(10) ** (6 - ctx.digits)
    if not prev.span[0] <= z <= z0 <= prev.span[1]:
        raise ConfigError("iterate_closed needs span[0] <= z <= z0 <= span[1]")
    if any(z <= zp <= z0 for zp in prev.pole_locations):
        raise ConfigError(f"y_{prev.p} has a pole on [{ctx.nstr(z, 10)}, {ctx.nstr(z0, 10)}]")
    boundary = boundary_value(model, E, z0)
    if z == z0:
        return boundary

    path = prev.path
    cuts = [z] + [c for c in path.breakpoints if z < c < z0] + [z0]
    cells = [(lo, hi, path.segment_for((lo + hi) / 2)) for lo, hi in zip(cuts, cuts[1:])]
    # tail[j] = ∫ y_{p-1} over cells j.. up to z0
    tail = [ctx.mpf(0)] * (len(cells) + 1)
    for j in range(len(cells) - 1, -1, -1):
        lo, hi, seg = cells[j]
        tail[j] = tail[j + 1] + _segment_integral(ctx, seg, lo, hi, tol)

    def integral_to_z0(j: int, s: Any):
        _, hi, seg = cells[j]
        return _segment_integral(ctx, seg, s, hi, tol) + tail[j + 1]

    total = tail[0]
    result = boundary * mp.exp(2 * total)
    for j, (lo, hi, _) in enumerate(cells):

        def integrand(s, j=j):
            y = path.evaluate(s)
            weight = mp.exp(2 * (total - integral_to_z0(j, s)))
            return (y * y - model.k2_z(E, s)) * weight

        result -= quad(integrand, lo, hi, tol, ctx)
    return result


# === NORMS ===

def sup_norm_diff(a: Iterate, b: Iterate, exclusion_radius: Any = 0, lo: Optional[Any] = None):
    """max |y_a - y_b| over both meshes at z >= lo, away from the poles of either."""
    ctx = a.path.ctx
    if a.span != b.span:
        raise SpanMismatch("iterates live on different spans")
    poles = list(a.pole_locations) + list(b.pole_locations)
    grid = sorted(set(a.path.sample_grid()) | set(b.path.sample_grid()))
    worst = ctx.mpf(0)
    for z in grid:
        if lo is not None and z < lo:
            continue
        if any(abs(z - zp) <= exclusion_radius for zp in poles):
            continue
        va, ia = a.path.evaluate_raw(z)
        vb, ib = b.path.evaluate_raw(z)
        if (ia and not va) or (ib and not vb):
            continue
        ya = 1 / va if ia else va
        yb = 1 / vb if ib else vb
        worst = max(worst, abs(ya - yb))
    return worst


def convergence_report(norms: List[Any], floor: Any, converged: bool) -> ConvergenceReport:
    """Ratios n_p / n_{p-1}² and the fitted exponent q in n_p ≈ K n_{p-1}^q."""
    ratios = [norms[i] / norms[i - 1] ** 2 for i in range(1, len(norms)) if norms[i - 1]]
    pairs = [(norms[i - 1], norms[i]) for i in range(1, len(norms)) if norms[i] > floor and norms[i - 1] > floor]
    exponent = None
    if len(pairs) >= 2:
        x = np.array([float(np.log(float(p))) for p, _ in pairs])
        y = np.array([float(np.log(float(q))) for _, q in pairs])
        exponent = float(np.polyfit(x, y, 1)[0])
    elif len(pairs) == 1:
        # a single pair through the origin of the log plot
        exponent = float(np.log(float(pairs[0][1])) / np.log(float(pairs[0][0])))
    return ConvergenceReport(
        norms=list(norms),
        ratios=ratios,
        exponent=exponent,
        quadratic=exponent is not None and exponent >= 1.8,
        converged=converged,
    )


# === RUN ===

def run_qlm(
    model: PotentialModel,
    E: Any,
    guess: Guess = Guess.LANGER,
    p_max: int = 6,
    stop_tol: Any = None,
    settings: Optional[QlmSettings] = None,
    n: int = 0,
    span: Optional[Tuple[Any, Any]] = None,
) -> Tuple[List[Iterate], ConvergenceReport]:
    """Iterate from the guess until ‖y_p - y_{p-1}‖ <= stop_tol or p = p_max.

    Raises Diverged after two consecutive norm increases above the noise floor.
    """
    ctx = model.ctx
    if p_max < 1:
        raise ConfigError("p_max must be at least 1")
    settings = settings or QlmSettings.for_context(ctx)
    stop_tol = ctx.convert(stop_tol) if stop_tol is not None else settings.stop_tol
    E = ctx.convert(E)
    iterates = [zeroth_iterate(model, E, guess, settings, n, span)]
    if "ik_guess" in iterates[0].flags:
        logger.warning(f"⚠️ ik zeroth iterate for {model.id.value}: turning-point singularities may propagate")
    cut = stable_left_edge(model, E)
    norms: List[Any] = []
    rises = 0
    converged = False
    for p in range(1, p_max + 1):
        it = qlm_step(model, E, iterates[-1], settings)
        norm = sup_norm_diff(it, iterates[-1], settings.exclusion_radius, cut)
        iterates.append(it)
        norms.append(norm)
        logger.debug(f"QLM p={p}: ‖Δy‖ = {ctx.nstr(norm, 5)}, {len(it.pole_locations)} poles")
        if len(norms) > 1 and norm > norms[-2] and norm > settings.noise_floor:
            rises += 1
            if rises >= 2:
                raise Diverged(f"QLM norms grew twice in a row at E = {ctx.nstr(E, 15)}")
        else:
            rises = 0
        if norm <= stop_tol:
            converged = True
            break
    return iterates, convergence_report(norms, settings.noise_floor, converged)


# === WAVE FUNCTION ===

def _chi_segment(it: Iterate, seg: PathSegment, known_z: Any, known_chi: Any) -> PathSegment:
    """χ on one segment as a polynomial, matched to a known value at one end."""
    ctx = it.path.ctx
    y = Jet(ctx, seg.anchor, seg.coeffs)
    order = 2 * len(seg.coeffs)
    crosses = False
    if seg.inverted:
        crosses = _sign(seg.evaluate(seg.lo)) != _sign(seg.evaluate(seg.hi)) or not seg.evaluate(seg.anchor)
    if not seg.inverted:
        chi = y.integral().pad(order).exp()
    elif not crosses:
        chi = y.pad(order).reciprocal().integral().exp()
    else:
        # through a node: χ ∝ w·exp(∫ -k²w), exact when w' = 1 + k²w²
        k2 = it.model.k2_jet_z(it.E, seg.anchor, len(seg.coeffs) - 1)
        chi = y.pad(order) * (-(k2 * y)).integral().pad(order).exp()
    factor = known_chi / chi.evaluate(known_z)
    return PathSegment(lo=seg.lo, hi=seg.hi, anchor=seg.anchor, coeffs=tuple(c * factor for c in chi.coeffs))


def _poly_square_integral(ctx: PrecisionContext, seg: PathSegment):
    """∫|p|² over the segment, exactly for the stored polynomial."""
    mp = ctx.mp
    c = seg.coeffs
    full = [ctx.mpf(0)] * (2 * len(c) - 1)
    for i, ci in enumerate(c):
        for j, cj in enumerate(c):
            full[i + j] += ci * mp.conj(cj)
    antider = lambda x: mp.fsum(v * (x - seg.anchor) ** (k + 1) / (k + 1) for k, v in enumerate(full))
    return abs(antider(seg.hi) - antider(seg.lo))


class Normalization(str, Enum):
    PEAK_ONE = "peak_one"
    UNIT_L2 = "unit_l2"


def reconstruct_chi(it: Iterate, normalization: Normalization = Normalization.PEAK_ONE) -> DensePath:
    """χ = exp(∫ y dz) as a dense path in z, normalized by peak or by ∫|χ|² dr = 1."""
    ctx = it.path.ctx
    segments: List[PathSegment] = []
    known_z, known_chi = it.span[1], ctx.mpf(1)
    for seg in reversed(it.path.segments):
        out = _chi_segment(it, seg, known_z, known_chi)
        segments.append(out)
        known_z, known_chi = seg.lo, out.evaluate(seg.lo)
    chi_path = DensePath(ctx, segments, it.path.tol)
    if Normalization(normalization) == Normalization.PEAK_ONE:
        peak = max((chi_path.evaluate(z) for z in chi_path.sample_grid(4)), key=abs)
        scale = 1 / peak
    else:
        lam = it.model.scale(it.E)
        total = ctx.mp.fsum(_poly_square_integral(ctx, s) for s in chi_path.segments) / lam
        scale = 1 / ctx.mp.sqrt(total)
    scaled = [
        PathSegment(lo=s.lo, hi=s.hi, anchor=s.anchor, coeffs=tuple(c * scale for c in s.coeffs))
        for s in chi_path.segments
    ]
    return DensePath(ctx, scaled, it.path.tol)
