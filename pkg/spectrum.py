"""
Bound-state energies
Shooting on the left-boundary defect of QLM iterates, pole counting as the
quantization condition, Hulthen quantization and WKB comparison reports.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from numkernel import (
    ConfigError,
    NoSignChange,
    NumericalError,
    PrecisionContext,
    root_find,
)
from potentials import (
    LeftBoundary,
    NoBoundState,
    PotentialModel,
    WrongTurningStructure,
    approximate_energy,
    build_model,
    hulthen_sqrt_eps,
    reference_energy,
    regular_logderiv,
)
from qlm import (
    ConvergenceReport,
    Guess,
    Iterate,
    Normalization,
    QlmSettings,
    reconstruct_chi,
    run_qlm,
    stable_left_edge,
)
from wkb import LangerGuide, _energy_window, decaying_boundary, wkb_energy

load_dotenv()

logger = logging.getLogger(__name__)

# === CONFIG ===
ROOT_TOL = os.getenv("QLM_ROOT_TOL")  # default: 10^(8-d)
BRACKET_SCAN_POINTS = 16


class WrongNodeCount(NumericalError):
    pass


@dataclass
class EigenResult:
    """Per-depth energies of one bound state plus diagnostics."""

    model: Dict[str, Any]
    n: int
    l: int
    energies: Dict[int, Any] = field(default_factory=dict)
    mismatches: Dict[int, Any] = field(default_factory=dict)
    pole_counts: Dict[int, int] = field(default_factory=dict)
    wkb_energy: Optional[Any] = None
    reference: Optional[Any] = None
    report: Optional[ConvergenceReport] = None
    digits_converged: Optional[float] = None
    digits: int = 0

    @property
    def depth(self) -> int:
        return max(self.energies) if self.energies else 0

    @property
    def energy(self):
        return self.energies[self.depth] if self.energies else None

    def relative_errors(self) -> Dict[str, Any]:
        """Relative errors against the reference, or against the deepest energy."""
        exact = self.reference if self.reference is not None else self.energy
        if exact is None or not exact:
            return {}
        out: Dict[str, Any] = {}
        if self.wkb_energy is not None:
            out["wkb"] = abs(self.wkb_energy - exact) / abs(exact)
        for q, E in self.energies.items():
            if self.reference is not None or q != self.depth:
                out[str(q)] = abs(E - exact) / abs(exact)
        return out


# === DEFECT ===

def left_target(model: PotentialModel, E: Any, z_min: Any):
    """Required log-derivative at the left end: the regular series or the decaying branch."""
    if model.spec.left_boundary == LeftBoundary.REGULAR_ORIGIN:
        return regular_logderiv(model, E, z_min)
    return decaying_boundary(model, E, z_min, side=-1)


def pole_count(it: Iterate, left_cut: Optional[Any] = None) -> int:
    """Interior simple poles of y, optionally only those right of left_cut."""
    if left_cut is None:
        return len(it.pole_locations)
    return sum(1 for z in it.pole_locations if z > left_cut)


def defect(it: Iterate, target: Any):
    """(-1)^N (y - y_L)/√(y² + y_L²) at the left end, continuous through node entries."""
    mp = it.path.ctx.mp
    value, inverted = it.left_raw
    if inverted:
        sign = 1 if value >= 0 else -1
        d = sign * (1 - value * target) / mp.sqrt(1 + value * value * target * target)
    else:
        d = (value - target) / mp.sqrt(value * value + target * target)
    return -d if len(it.pole_locations) % 2 else d


def raw_defect(it: Iterate, target: Any):
    """z_min·y - (l+1) at a regular origin, y - y_L otherwise."""
    model = it.model
    z_min = it.span[0]
    value, inverted = it.left_raw
    if model.spec.left_boundary == LeftBoundary.REGULAR_ORIGIN:
        if inverted:
            return z_min / value - (model.l + 1) if value else model.ctx.mp.inf
        return z_min * value - (model.l + 1)
    if inverted:
        return 1 / value - target if value else model.ctx.mp.inf
    return value - target


@dataclass
class DefectEvaluation:
    """Shooting defect D (root-finding) and the raw mismatch of one iterate."""

    E: Any
    value: Any
    raw: Any
    iterate: Iterate
    report: ConvergenceReport


def evaluate_defect(
    model: PotentialModel, E: Any, p: int, guess: Guess, settings: QlmSettings, n: int = 0
) -> DefectEvaluation:
    iterates, report = run_qlm(model, E, guess, p, stop_tol=0, settings=settings, n=n)
    it = iterates[-1]
    target = left_target(model, it.E, it.span[0])
    return DefectEvaluation(E=it.E, value=defect(it, target), raw=raw_defect(it, target), iterate=it, report=report)


def mismatch(
    model: PotentialModel, E: Any, p: int, guess: Guess = Guess.LANGER, settings: Optional[QlmSettings] = None
):
    """Raw left-boundary mismatch of the p-th iterate at energy E.

    z_min·y_p(z_min) - (l+1) at a regular origin, y_p(z_min) minus the decaying
    branch otherwise. Its sign change at an eigenvalue sits next to a pole, so
    brackets are searched with the shooting defect D instead.
    """
    if p < 1:
        raise ConfigError("mismatch needs p >= 1")
    settings = settings or QlmSettings.for_context(model.ctx)
    return evaluate_defect(model, E, p, Guess(guess), settings).raw


# === BRACKETS ===

def _wkb_or_none(model: PotentialModel, n: int):
    if n < 0:
        return None
    try:
        return wkb_energy(model, n)
    except NumericalError as e:
        logger.warning(f"⚠️ no WKB level n={n} for {model.id.value}: {e}")
        return None


def _term_window(model: PotentialModel) -> Tuple[Any, Optional[Any]]:
    bottom, limit = _energy_window(model, model.spec.wkb_centrifugal)
    return bottom, limit


def find_bracket(
    model: PotentialModel, n: int, p: int, guess: Guess = Guess.LANGER, settings: Optional[QlmSettings] = None
) -> Tuple[Any, Any]:
    """Energy bracket around level n, seeded by WKB energies n-1, n, n+1.

    Falls back to a grid scan between the neighbouring WKB levels.
    """
    ctx = model.ctx
    settings = settings or QlmSettings.for_context(ctx)
    to_term = model.energy_term
    center = _wkb_or_none(model, n)
    if center is None:
        center = approximate_energy(model, n)
    if center is None:
        raise NoBoundState(f"{model.id.value} has no level n = {n}")
    below, above = _wkb_or_none(model, n - 1), _wkb_or_none(model, n + 1)
    c = to_term(center)
    bottom, limit = _term_window(model)
    gap = (to_term(above) - c) if above is not None else (c - to_term(below) if below is not None else abs(c) / 2 or 1)
    lo = (to_term(below) + c) / 2 if below is not None else max(c - gap / 2, (bottom + c) / 2)
    if above is not None:
        hi = (c + to_term(above)) / 2
    elif limit is not None:
        hi = c + (limit - c) * 3 / 4
    else:
        hi = c + gap / 2

    def D(term):
        return evaluate_defect(model, model.energy_from_term(term), p, guess, settings, n).value

    try:
        if (D(lo) > 0) != (D(hi) > 0):
            return model.energy_from_term(lo), model.energy_from_term(hi)
    except WrongTurningStructure:
        pass
    logger.warning(f"⚠️ WKB-seeded bracket failed for {model.id.value} n={n}, scanning")
    left = to_term(below) if below is not None else max(c - gap, (bottom + c) / 2)
    right = to_term(above) if above is not None else hi
    grid = [left + (right - left) * k / (BRACKET_SCAN_POINTS - 1) for k in range(BRACKET_SCAN_POINTS)]
    values = []
    for term in grid:
        try:
            values.append(D(term))
        except WrongTurningStructure:
            values.append(None)
    cells = [
        (grid[k], grid[k + 1])
        for k in range(len(grid) - 1)
        if values[k] is not None and values[k + 1] is not None and (values[k] > 0) != (values[k + 1] > 0)
    ]
    if not cells:
        raise NoSignChange(f"no eigenvalue bracket found for {model.id.value} n={n}")
    best = min(cells, key=lambda cell: abs((cell[0] + cell[1]) / 2 - c))
    return model.energy_from_term(best[0]), model.energy_from_term(best[1])


# === SOLVE ===

def _root_tol(ctx: PrecisionContext, tol: Any):
    if tol is not None:
        return ctx.convert(tol)
    return ctx.mpf(ROOT_TOL) if ROOT_TOL else ctx.mpf(10) ** (8 - ctx.digits)


def _solve_depth(
    model: PotentialModel, n: int, q: int, bracket: Tuple[Any, Any], tol: Any, guess: Guess, settings: QlmSettings
) -> DefectEvaluation:
    ctx = model.ctx
    lo, hi = model.energy_term(ctx.convert(bracket[0])), model.energy_term(ctx.convert(bracket[1]))
    if lo > hi:
        lo, hi = hi, lo
    f = lambda term: evaluate_defect(model, model.energy_from_term(term), q, guess, settings, n).value
    term = root_find(f, (lo, hi), tol, ctx)
    return evaluate_defect(model, model.energy_from_term(term), q, guess, settings, n)


def _narrow(model: PotentialModel, center: Any, width: Any) -> Tuple[Any, Any]:
    c = model.energy_term(center)
    return model.energy_from_term(c - width), model.energy_from_term(c + width)


def _bracketed(
    model: PotentialModel, n: int, q: int, center: Any, width: Any, fallback: Tuple[Any, Any],
    guess: Guess, settings: QlmSettings,
) -> Tuple[Any, Any]:
    """A narrow bracket around `center`, widened until the defect changes sign."""
    for _ in range(6):
        lo, hi = _narrow(model, center, width)
        try:
            dlo = evaluate_defect(model, lo, q, guess, settings, n).value
            dhi = evaluate_defect(model, hi, q, guess, settings, n).value
        except NumericalError:
            break
        if (dlo > 0) != (dhi > 0):
            return lo, hi
        width *= 10
    return fallback


def solve_energy(
    model: PotentialModel,
    n: int,
    p: int,
    bracket: Optional[Tuple[Any, Any]] = None,
    tol: Any = None,
    guess: Guess = Guess.LANGER,
    settings: Optional[QlmSettings] = None,
    per_depth: bool = True,
    escalate_digits: Optional[int] = None,
) -> EigenResult:
    """Root-find the defect at each depth q = 1..p; each depth gets its own energy E_q.

    With escalate_digits the deepest energy is re-solved at that precision
    from a narrow bracket around the first root.
    """
    ctx = model.ctx
    if p < 1:
        raise ConfigError("solve_energy needs p >= 1")
    guess = Guess(guess)
    settings = settings or QlmSettings.for_context(ctx)
    tol = _root_tol(ctx, tol)
    bracket = bracket or find_bracket(model, n, 1 if per_depth else p, guess, settings)
    result = EigenResult(model=model.describe(), n=n, l=model.l, digits=ctx.digits)
    depths = range(1, p + 1) if per_depth else [p]
    previous: List[Any] = []
    evaluation = None
    for q in depths:
        current = bracket
        if previous:
            width = max(abs(model.energy_term(previous[-1]) - model.energy_term(previous[-2])) * 4
                        if len(previous) > 1 else abs(model.energy_term(previous[-1])) * ctx.mpf("1e-3"),
                        tol * 100)
            current = _bracketed(model, n, q, previous[-1], width, bracket, guess, settings)
        evaluation = _solve_depth(model, n, q, current, tol, guess, settings)
        count = pole_count(evaluation.iterate, stable_left_edge(model, evaluation.E))
        if count != n:
            raise WrongNodeCount(f"root at E = {ctx.nstr(evaluation.E, 15)} has {count} nodes, expected {n}")
        result.energies[q] = evaluation.E
        result.mismatches[q] = evaluation.raw
        result.pole_counts[q] = count
        previous.append(evaluation.E)
        logger.info(f"✅ {model.id.value} n={n} depth {q}: E = {ctx.nstr(evaluation.E, 20)}")

    _, result.report = run_qlm(model, result.energy, guess, p, stop_tol=0, settings=settings, n=n)
    if len(previous) > 1 and previous[-1] != previous[-2]:
        rel = abs(previous[-1] - previous[-2]) / abs(previous[-1])
        result.digits_converged = float(-ctx.mp.log10(rel))

    if escalate_digits and escalate_digits > ctx.digits:
        result = _escalate(model, n, p, result, escalate_digits, guess)
    return result


def _escalate(model: PotentialModel, n: int, p: int, result: EigenResult, digits: int, guess: Guess) -> EigenResult:
    high = model.with_context(PrecisionContext(digits))
    hctx = high.ctx
    settings = QlmSettings.for_context(hctx)
    center = hctx.convert(result.energy)
    width = abs(high.energy_term(center)) * hctx.mpf(10) ** (10 - model.ctx.digits) + hctx.mpf(10) ** (10 - model.ctx.digits)
    bracket = _bracketed(high, n, p, center, width, _narrow(high, center, width * 10 ** 6), guess, settings)
    evaluation = _solve_depth(high, n, p, bracket, _root_tol(hctx, None), guess, settings)
    count = pole_count(evaluation.iterate, stable_left_edge(high, evaluation.E))
    if count != n:
        raise WrongNodeCount(f"escalated root has {count} nodes, expected {n}")
    result.energies[p] = evaluation.E
    result.mismatches[p] = evaluation.raw
    result.digits = digits
    _, result.report = run_qlm(high, evaluation.E, guess, p, stop_tol=0, settings=settings, n=n)
    logger.info(f"✅ escalated to {digits} digits: E = {hctx.nstr(evaluation.E, 25)}")
    return result


# === HULTHEN ===

def _hulthen_s(a: Any, m: Any, hbar: Any, ctx: PrecisionContext):
    a, m, hbar = ctx.convert(a), ctx.convert(m), ctx.convert(hbar)
    return ctx.mp.sqrt(2 * m) * a / hbar


def hulthen_energy(a: Any, A: Any, n: int, m: Any = "0.5", hbar: Any = "1", ctx: Optional[PrecisionContext] = None):
    """E = -ε from s(√(ε+A) - √ε) = n + 1, s = √(2ma²/ħ²)."""
    ctx = ctx or PrecisionContext()
    s = _hulthen_s(ctx.convert(a), ctx.convert(m), ctx.convert(hbar), ctx)
    root = hulthen_sqrt_eps(s, ctx.convert(A), n, ctx)
    return -root * root


def hulthen_qlm_energy(
    a: Any, A: Any, n: int, p: int, m: Any = "0.5", hbar: Any = "1",
    ctx: Optional[PrecisionContext] = None, seeds: Tuple[Any, Any] = (1, 1),
):
    """Hulthen level from the residues of y_p/t at t = 0, 1 and ∞ (t = e^(-r/a)).

    At t = 0 and t = ∞ the p-th iterate tends to constants obeying the
    linearized recurrence c_p = (c_{p-1}² + κ²)/(2c_{p-1}) with κ² = ε and
    ε + A; the zeroth iterate supplies the seeds (as multiples of κ). The
    residue at t = 1 is fixed by regularity at the origin. The contour sum
    gives s(c_∞ - c_0) = n + 1.
    """
    ctx = ctx or PrecisionContext()
    mp = ctx.mp
    A = ctx.convert(A)
    s = _hulthen_s(a, m, hbar, ctx)
    seed0, seed_inf = ctx.convert(seeds[0]), ctx.convert(seeds[1])
    if p < 1:
        raise ConfigError("hulthen_qlm_energy needs p >= 1")

    def residue(kappa2, seed):
        c = mp.sqrt(kappa2) * seed
        for _ in range(p):
            c = (c * c + kappa2) / (2 * c)
        return c

    def F(eps):
        return s * (residue(eps + A, seed_inf) - residue(eps, seed0)) - (n + 1)

    lo = ctx.mpf(10) ** (-ctx.digits)
    hi = (A * s * s + 1) ** 2
    if F(lo) <= 0:
        raise NoBoundState(f"Hulthen level n = {n} is not bound at iterate {p}")
    eps = root_find(F, (lo, hi), ctx.mpf(10) ** (4 - ctx.digits), ctx)
    return -eps


# === REPORTS ===

def wkb_vs_qlm_report(
    model: PotentialModel, n: int, p_max: int, guess: Guess = Guess.LANGER,
    settings: Optional[QlmSettings] = None, escalate_digits: Optional[int] = None,
) -> EigenResult:
    """WKB energy, per-depth QLM energies and the reference in one record."""
    result = solve_energy(model, n, p_max, guess=guess, settings=settings, escalate_digits=escalate_digits)
    result.wkb_energy = wkb_energy(model, n)
    try:
        result.reference = reference_energy(model, n)
    except NoBoundState:
        result.reference = None
    errors = result.relative_errors()
    logger.info(
        f"✅ {model.id.value} n={n}: WKB error {model.ctx.nstr(errors.get('wkb', 0), 4)}, "
        f"QLM(1) error {model.ctx.nstr(errors.get('1', 0), 4)}"
    )
    return result


def calibrate_alpha(
    target: Any, n: int = 0, p: int = 6, digits: int = 50,
    window: Tuple[str, str] = ("0.00729735", "0.00729736"), settings: Optional[QlmSettings] = None,
):
    """α reproducing a modified Coulomb level (expensive)."""
    ctx = PrecisionContext(digits)
    target = ctx.parse(str(target))

    def f(alpha):
        model = build_model("modified_coulomb_dirac", {"alpha": ctx.nstr(alpha)}, 0, None, ctx)
        return solve_energy(model, n, p, settings=settings, per_depth=False).energy - target

    alpha = root_find(f, (ctx.parse(window[0]), ctx.parse(window[1])), ctx.mpf(10) ** (-15), ctx)
    logger.info(f"✅ calibrated alpha = {ctx.nstr(alpha, 20)} (1/alpha = {ctx.nstr(1 / alpha, 20)})")
    return alpha


# === WAVE FUNCTIONS ===

@dataclass
class WavefunctionCurves:
    """Peak-normalized χ of the converged iterate, the Langer function and the first iterate on a uniform r-grid."""

    energy: Any
    r: List[Any]
    chi_exact: List[Any]
    chi_wkb: List[Any]
    chi_qlm1: List[Any]
    bulk_ratio: Optional[float] = None

    def rows(self, ctx: PrecisionContext) -> List[Dict[str, Any]]:
        out = []
        for r, ex, wkb, q1 in zip(self.r, self.chi_exact, self.chi_wkb, self.chi_qlm1):
            out.append({
                "r": ctx.nstr(r, 20),
                "chi_exact": ctx.nstr(ex, 20),
                "chi_wkb": ctx.nstr(wkb, 20),
                "chi_qlm1": ctx.nstr(q1, 20),
                "log10_err_wkb": _log10_abs(ex - wkb),
                "log10_err_qlm1": _log10_abs(ex - q1),
            })
        return out


def _log10_abs(x: Any) -> float:
    x = abs(x)
    return math.log10(float(x)) if x else float("-inf")


def _bulk_ratio(chi_exact: List[Any], chi_wkb: List[Any], chi_qlm1: List[Any], r: List[Any]) -> Optional[float]:
    """sup|χ - χ_WKB| / sup|χ - χ_QLM1| where the cumulative probability lies in [0.1, 0.9]."""
    ex = np.array([float(v) for v in chi_exact])
    grid = np.array([float(v) for v in r])
    density = ex * ex
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))])
    if cumulative[-1] <= 0:
        return None
    fraction = cumulative / cumulative[-1]
    bulk = (fraction >= 0.1) & (fraction <= 0.9)
    if not bulk.any():
        return None
    err_wkb = np.abs(ex - np.array([float(v) for v in chi_wkb]))[bulk].max()
    err_qlm = np.abs(ex - np.array([float(v) for v in chi_qlm1]))[bulk].max()
    return float(err_wkb / err_qlm) if err_qlm else float("inf")


def wavefunction_curves(
    model: PotentialModel,
    n: int,
    p: int = 6,
    exact_depth: int = 10,
    points: int = 200,
    guess: Guess = Guess.LANGER,
    settings: Optional[QlmSettings] = None,
    energy: Any = None,
) -> WavefunctionCurves:
    """χ curves at the converged energy; the exact_depth iterate stands in for the exact solution."""
    ctx = model.ctx
    settings = settings or QlmSettings.for_context(ctx)
    if points < 2:
        raise ConfigError("the wavefunction grid needs at least two points")
    if energy is None:
        energy = solve_energy(model, n, p, guess=guess, settings=settings, per_depth=False).energy
    energy = ctx.convert(energy)
    iterates, _ = run_qlm(model, energy, guess, exact_depth, stop_tol=0, settings=settings, n=n)
    exact = reconstruct_chi(iterates[-1], Normalization.PEAK_ONE)
    first = reconstruct_chi(iterates[1], Normalization.PEAK_ONE)
    z_min, z0 = iterates[-1].span
    zs = [z_min + (z0 - z_min) * k / (points - 1) for k in range(points)]
    guide = LangerGuide(model, energy, n, (z_min, z0), settings.ode_tol)
    langer = [guide.chi(z)[0] for z in zs]
    peak = max(langer, key=abs)
    s = model.scale(energy)
    curves = WavefunctionCurves(
        energy=energy,
        r=[z / s for z in zs],
        chi_exact=[exact.evaluate(z) for z in zs],
        chi_wkb=[v / peak for v in langer],
        chi_qlm1=[first.evaluate(z) for z in zs],
    )
    curves.bulk_ratio = _bulk_ratio(curves.chi_exact, curves.chi_wkb, curves.chi_qlm1, curves.r)
    if curves.bulk_ratio is not None:
        logger.info(f"✅ wavefunction error ratio WKB/QLM1 over the bulk: {curves.bulk_ratio:.1f}")
    return curves
