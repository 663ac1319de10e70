"""
Potential catalog
Named potential models with unit conventions, effective-potential jets, turning
points, asymptotic cutoffs, closed-form reference energies and the regular
series at the origin.

Everything downstream works in z = λ·r, where the radial equation reads
χ'' + k²(z) χ = 0 with k²(z) = energy_term(E) − V_eff(z).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from numkernel import (
    ConfigError,
    DEFAULT_DIGITS,
    Jet,
    NumericalError,
    PrecisionContext,
    Singularity,
    quad,
    root_find,
)

logger = logging.getLogger(__name__)

TURNING_SCAN_POINTS = 600
ORIGIN_SERIES_MAX_ORDER = 200


class DomainViolation(NumericalError):
    pass


class WrongTurningStructure(NumericalError):
    pass


class NotBound(NumericalError):
    pass


class NoBoundState(NumericalError):
    pass


class ModelId(str, Enum):
    QUARTIC = "quartic"
    HARMONIC = "harmonic"
    COULOMB = "coulomb"
    HULTHEN = "hulthen"
    MORSE = "morse"
    POSCHL_TELLER = "poschl_teller"
    ECKART = "eckart"
    MODIFIED_COULOMB_DIRAC = "modified_coulomb_dirac"


class Domain(str, Enum):
    HALF_LINE = "half_line"
    FULL_LINE = "full_line"


class Centrifugal(str, Enum):
    BARE = "bare"  # l(l+1)/z², the Riccati dynamics
    LANGER = "langer"  # (l+1/2)²/z², the Langer wave function


class LeftBoundary(str, Enum):
    REGULAR_ORIGIN = "regular_origin"
    DECAYING = "decaying"


class TailCriterion(str, Enum):
    SUPPRESSION = "suppression"
    VARIATION = "variation"


def _exp(ctx: PrecisionContext, x: Any):
    return x.exp() if isinstance(x, Jet) else ctx.mp.exp(x)


def _expm1(ctx: PrecisionContext, x: Any):
    """exp(x) - 1 without cancellation near x = 0."""
    if isinstance(x, Jet):
        e = x.exp()
        return Jet(ctx, e.anchor, (ctx.mp.expm1(x.value),) + e.coeffs[1:])
    return ctx.mp.expm1(x)


# === CATALOG ===

def _quartic(ctx, p, r):
    return p["c"] * r ** 4


def _harmonic(ctx, p, r):
    return p["c"] * r ** 2


def _coulomb(ctx, p, r):
    return -p["Z"] / r


def _hulthen(ctx, p, r):
    return -p["A"] / _expm1(ctx, r / p["a"])


def _morse(ctx, p, r):
    e = _exp(ctx, -r / p["a"])
    return p["D"] * (e * e - 2 * e)


def _poschl_teller(ctx, p, r):
    e = _exp(ctx, 2 * r / p["a"])
    return -4 * p["V0"] * e / ((1 + e) * (1 + e))


def _eckart(ctx, p, r):
    e = _exp(ctx, r / p["a"])
    return -p["A"] * e / (1 + e) - p["B"] * e / ((1 + e) * (1 + e))


def _modified_coulomb(ctx, p, rho):
    a2 = p["alpha"] ** 2
    return -1 / (2 * rho) - (a2 / 4) / (rho * rho) + (3 * a2 / 4) / (rho * rho * (rho + a2) * (rho + a2))


# r²·V(r), analytic at the origin (regular singular models only)

def _quartic_r2v(ctx, p, r):
    return p["c"] * r ** 6


def _coulomb_r2v(ctx, p, r):
    return -p["Z"] * r


def _hulthen_r2v(ctx, p, r):
    # r²V = -A a r · x/(e^x - 1) with x = r/a
    a = p["a"]
    order = r.order
    mp = ctx.mp
    shifted = Jet(ctx, r.anchor, [a ** (-k) / mp.factorial(k + 1) for k in range(order + 1)])
    return -p["A"] * a * r * shifted.reciprocal()


@dataclass(frozen=True)
class ModelSpec:
    id: ModelId
    domain: Domain
    defaults: Dict[str, str]
    units: Tuple[str, str]  # (m, hbar)
    potential: Callable
    left_boundary: LeftBoundary
    tail: TailCriterion
    confining: bool
    wkb_centrifugal: Centrifugal
    length_param: Optional[str] = None
    r2v: Optional[Callable] = None
    energy_dependent: bool = False


CATALOG: Dict[ModelId, ModelSpec] = {
    ModelId.QUARTIC: ModelSpec(
        ModelId.QUARTIC, Domain.HALF_LINE, {"c": "1"}, ("1", "1"), _quartic,
        LeftBoundary.REGULAR_ORIGIN, TailCriterion.SUPPRESSION, True, Centrifugal.LANGER,
        r2v=_quartic_r2v,
    ),
    ModelId.HARMONIC: ModelSpec(
        ModelId.HARMONIC, Domain.FULL_LINE, {"c": "1"}, ("0.5", "1"), _harmonic,
        LeftBoundary.DECAYING, TailCriterion.SUPPRESSION, True, Centrifugal.LANGER,
    ),
    ModelId.COULOMB: ModelSpec(
        ModelId.COULOMB, Domain.HALF_LINE, {"Z": "1"}, ("0.5", "1"), _coulomb,
        LeftBoundary.REGULAR_ORIGIN, TailCriterion.SUPPRESSION, False, Centrifugal.LANGER,
        r2v=_coulomb_r2v,
    ),
    ModelId.HULTHEN: ModelSpec(
        ModelId.HULTHEN, Domain.HALF_LINE, {"A": "4", "a": "1"}, ("0.5", "1"), _hulthen,
        LeftBoundary.REGULAR_ORIGIN, TailCriterion.VARIATION, False, Centrifugal.BARE,
        length_param="a", r2v=_hulthen_r2v,
    ),
    ModelId.MORSE: ModelSpec(
        ModelId.MORSE, Domain.FULL_LINE, {"D": "16", "a": "1"}, ("0.5", "1"), _morse,
        LeftBoundary.DECAYING, TailCriterion.VARIATION, False, Centrifugal.LANGER,
        length_param="a",
    ),
    ModelId.POSCHL_TELLER: ModelSpec(
        ModelId.POSCHL_TELLER, Domain.FULL_LINE, {"V0": "20", "a": "1"}, ("0.5", "1"), _poschl_teller,
        LeftBoundary.DECAYING, TailCriterion.VARIATION, False, Centrifugal.LANGER,
        length_param="a",
    ),
    ModelId.ECKART: ModelSpec(
        ModelId.ECKART, Domain.FULL_LINE, {"A": "1", "B": "20", "a": "1"}, ("0.5", "1"), _eckart,
        LeftBoundary.DECAYING, TailCriterion.VARIATION, False, Centrifugal.LANGER,
        length_param="a",
    ),
    ModelId.MODIFIED_COULOMB_DIRAC: ModelSpec(
        ModelId.MODIFIED_COULOMB_DIRAC, Domain.HALF_LINE, {"alpha": "0.0072973525693"}, ("0.5", "1"),
        _modified_coulomb, LeftBoundary.DECAYING, TailCriterion.SUPPRESSION, False, Centrifugal.LANGER,
        energy_dependent=True,
    ),
}


# === MODELS ===

@dataclass(frozen=True)
class UnitScales:
    """m, ħ and the derived λ = √(2m)/ħ, g = 1/λ."""

    m: Any
    hbar: Any
    lam: Any
    g: Any

    @classmethod
    def build(cls, ctx: PrecisionContext, m: Any, hbar: Any) -> "UnitScales":
        m, hbar = ctx.convert(m), ctx.convert(hbar)
        if m <= 0 or hbar <= 0:
            raise ConfigError("mass and hbar must be positive")
        lam = ctx.mp.sqrt(2 * m) / hbar
        return cls(m=m, hbar=hbar, lam=lam, g=1 / lam)


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """A catalog potential with parameters, units and angular momentum, bound to a precision."""

    spec: ModelSpec
    params: Dict[str, Any]
    units: UnitScales
    l: int
    ctx: PrecisionContext
    raw_params: Dict[str, str] = field(default_factory=dict)

    @property
    def id(self) -> ModelId:
        return self.spec.id

    @property
    def domain(self) -> Domain:
        return self.spec.domain

    @property
    def energy_dependent(self) -> bool:
        return self.spec.energy_dependent

    @property
    def half_line(self) -> bool:
        return self.spec.domain == Domain.HALF_LINE

    def with_context(self, ctx: PrecisionContext) -> "PotentialModel":
        """The same model re-parsed at another precision."""
        return build_model(
            self.id.value, self.raw_params, self.l,
            {"m": str(self.units.m), "hbar": str(self.units.hbar)} if not self.energy_dependent else None,
            ctx,
        )

    def describe(self) -> Dict[str, Any]:
        return {
            "id": self.id.value,
            "params": dict(self.raw_params),
            "l": self.l,
            "units": {"m": self.ctx.nstr(self.units.m), "hbar": self.ctx.nstr(self.units.hbar)},
            "domain": self.domain.value,
        }

    # --- energy-dependent unit map ---

    def scale(self, E: Any):
        """z = scale(E)·r."""
        if self.energy_dependent:
            return self.params["alpha"] * E
        return self.units.lam

    def energy_term(self, E: Any):
        """The constant in k² = energy_term − V_eff."""
        if self.energy_dependent:
            alpha = self.params["alpha"]
            return (E * E - 1) / (4 * alpha * alpha * E * E)
        return E

    def energy_from_term(self, term: Any):
        if self.energy_dependent:
            alpha = self.params["alpha"]
            return 1 / self.ctx.mp.sqrt(1 - 4 * alpha * alpha * term)
        return term

    def threshold(self) -> Optional[Any]:
        """Continuum threshold in energy-term units; None for confining models."""
        if self.spec.confining:
            return None
        if self.id == ModelId.ECKART:
            return min(self.ctx.mpf(0), -self.params["A"])
        return self.ctx.mpf(0)

    def length(self):
        """Natural length of the model in r-units."""
        if self.spec.length_param:
            return self.params[self.spec.length_param]
        if self.energy_dependent:
            return 1 / self.params["alpha"]
        if self.id == ModelId.COULOMB:
            return 1 / self.params["Z"]
        return self.ctx.mpf(1)

    # --- potentials in z-units ---

    def _centrifugal_coeff(self, centrifugal: Centrifugal):
        if not self.half_line:
            return 0
        if centrifugal == Centrifugal.LANGER:
            return (self.ctx.mpf(self.l) + self.ctx.mpf("0.5")) ** 2
        return self.l * (self.l + 1)

    def v_eff_z(self, E: Any, z: Any, centrifugal: Centrifugal = Centrifugal.BARE):
        """V_eff at z (number or jet in z)."""
        ctx = self.ctx
        if not isinstance(z, Jet):
            self._check_domain(z)
        if self.energy_dependent:
            v = self.spec.potential(ctx, self.params, z)
        else:
            v = self.spec.potential(ctx, self.params, z / self.units.lam)
        cent = self._centrifugal_coeff(centrifugal)
        if cent:
            v = v + cent / (z * z)
        return v

    def k2_z(self, E: Any, z: Any, centrifugal: Centrifugal = Centrifugal.BARE):
        return self.energy_term(E) - self.v_eff_z(E, z, centrifugal)

    def k2_jet_z(self, E: Any, z: Any, order: int, centrifugal: Centrifugal = Centrifugal.BARE) -> Jet:
        self._check_domain(z)
        zj = Jet.variable(self.ctx, z, order)
        return self.energy_term(E) - self.v_eff_z(E, zj, centrifugal)

    def _check_domain(self, z: Any):
        if self.half_line and z <= 0:
            raise DomainViolation(f"{self.id.value} lives on the half-line; got z = {self.ctx.nstr(z, 10)}")


def build_model(
    model_id: str,
    params: Optional[Dict[str, str]] = None,
    l: int = 0,
    units: Optional[Dict[str, str]] = None,
    ctx: Optional[PrecisionContext] = None,
) -> PotentialModel:
    """Build a catalog model from decimal-string parameters.

    Args:
        model_id: catalog id
        params: name -> decimal string, merged over the catalog defaults
        l: angular momentum (half-line models)
        units: {"m": ..., "hbar": ...} decimal strings
        ctx: precision context

    Returns:
        PotentialModel
    """
    ctx = ctx or PrecisionContext(DEFAULT_DIGITS)
    try:
        spec = CATALOG[ModelId(model_id)]
    except ValueError:
        known = ", ".join(m.value for m in ModelId)
        raise ConfigError(f"unknown potential id {model_id!r} (known: {known})")
    raw = dict(spec.defaults)
    for name, value in (params or {}).items():
        if name not in spec.defaults:
            raise ConfigError(f"{spec.id.value} has no parameter {name!r} (expected {sorted(spec.defaults)})")
        raw[name] = str(value)
    values = {name: ctx.parse(text) for name, text in raw.items()}
    if int(l) < 0:
        raise ConfigError("angular momentum must be non-negative")
    if spec.domain == Domain.FULL_LINE and int(l) != 0:
        raise ConfigError(f"{spec.id.value} is a full-line model; l must be 0")
    m, hbar = spec.units
    if units and not spec.energy_dependent:
        m = units.get("m", m)
        hbar = units.get("hbar", hbar)
    scales = UnitScales.build(ctx, ctx.parse(m), ctx.parse(hbar))
    return PotentialModel(spec=spec, params=values, units=scales, l=int(l), ctx=ctx, raw_params=raw)


# === POINTWISE OPERATIONS ===

def k_squared(model: PotentialModel, E: Any, r: Any):
    """k² in z-units at radius r: energy_term(E) − V(r) − l(l+1)/(λr)²."""
    r = model.ctx.convert(r)
    if model.half_line and r <= 0:
        raise DomainViolation(f"r must be positive on the half-line, got {model.ctx.nstr(r, 10)}")
    return model.k2_z(E, model.scale(E) * r)


def v_jet(model: PotentialModel, E: Any, r: Any, order: int) -> Jet:
    """Taylor jet in r of the effective potential (centrifugal included), no finite differences."""
    ctx = model.ctx
    if order > 64:
        raise ConfigError("v_jet order is limited to 64")
    r = ctx.convert(r)
    if model.half_line and r <= 0:
        raise DomainViolation(f"r must be positive on the half-line, got {ctx.nstr(r, 10)}")
    rj = Jet.variable(ctx, r, order)
    s = model.scale(E)
    zj = rj * s
    # v_eff_z expects the jet in z; re-anchor the result in r
    vz = model.v_eff_z(E, Jet(ctx, zj.value, zj.coeffs))
    return Jet(ctx, r, vz.coeffs)


# === TURNING POINTS ===

def _grid(ctx: PrecisionContext, lo: Any, hi: Any, count: int, log: bool) -> List[Any]:
    mp = ctx.mp
    if log:
        a, b = mp.log(lo), mp.log(hi)
        return [mp.exp(a + (b - a) * i / (count - 1)) for i in range(count)]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _outer_reach(model: PotentialModel, E: Any, centrifugal: Centrifugal, direction: int) -> Any:
    """A z far enough out that k² is negative and stays so."""
    ctx = model.ctx
    z = model.length() * model.scale(E)
    for _ in range(200):
        z = z * 2
        if model.k2_z(E, direction * z, centrifugal) < 0 and model.k2_z(E, direction * 2 * z, centrifugal) < 0:
            return direction * 2 * z
    raise WrongTurningStructure("k² does not become negative at large distance; state is not bound")


def turning_points_z(
    model: PotentialModel, E: Any, centrifugal: Centrifugal = Centrifugal.BARE
) -> Tuple[Any, Any]:
    """Turning points (a, b) in z-units.

    On the half-line with k² > 0 down to the origin, a is the origin.
    """
    ctx = model.ctx
    E = ctx.convert(E)
    k2 = lambda z: model.k2_z(E, z, centrifugal)
    if model.half_line:
        hi = _outer_reach(model, E, centrifugal, 1)
        lo = hi * ctx.mpf(10) ** (-12)
        grid = _grid(ctx, lo, hi, TURNING_SCAN_POINTS, log=True)
    else:
        hi = _outer_reach(model, E, centrifugal, 1)
        lo = _outer_reach(model, E, centrifugal, -1)
        grid = _grid(ctx, lo, hi, TURNING_SCAN_POINTS, log=False)

    values = [k2(z) for z in grid]
    crossings = []
    for i in range(len(grid) - 1):
        if (values[i] > 0) != (values[i + 1] > 0):
            crossings.append((grid[i], grid[i + 1]))

    tol = ctx.mpf(10) ** (5 - ctx.digits)
    roots = [root_find(k2, cell, tol, ctx) for cell in crossings]
    if model.half_line and values[0] > 0 and len(roots) == 1:
        return ctx.mpf(0), roots[0]
    if len(roots) != 2:
        raise WrongTurningStructure(
            f"{model.id.value} at E = {ctx.nstr(E, 12)}: expected two turning points, found {len(roots)}"
        )
    return roots[0], roots[1]


def turning_points(
    model: PotentialModel, E: Any, centrifugal: Centrifugal = Centrifugal.BARE
) -> Tuple[Any, Any]:
    """Turning points (a, b) in r-units."""
    a, b = turning_points_z(model, E, centrifugal)
    s = model.scale(model.ctx.convert(E))
    return a / s, b / s


# === ASYMPTOTIC CUTOFFS ===

def _abs_k(model: PotentialModel, E: Any, centrifugal: Centrifugal = Centrifugal.BARE):
    mp = model.ctx.mp
    return lambda z: mp.sqrt(abs(model.k2_z(E, z, centrifugal)))


def _suppression_start(model: PotentialModel, E: Any, zt: Any, target: Any, direction: int):
    """z beyond the turning point zt where ∫|k| from zt reaches `target`."""
    ctx = model.ctx
    absk = _abs_k(model, E)
    tol = ctx.mpf(10) ** (8 - ctx.digits)

    def action(z):
        lo, hi = (zt, z) if direction > 0 else (z, zt)
        sing = Singularity.LEFT if direction > 0 else Singularity.RIGHT
        return quad(absk, lo, hi, tol, ctx, sing, "0.5") - target

    width = model.length() * model.scale(E)
    if direction > 0:
        far = zt + width
        while action(far) < 0:
            far = zt + 2 * (far - zt)
        return root_find(action, (zt, far), tol, ctx)
    if model.half_line:
        near = zt / 2
        for _ in range(400):
            if action(near) >= 0:
                return root_find(action, (near, zt), tol, ctx)
            near = near / 2
        raise NotBound("the left forbidden region does not suppress the growing solution")
    far = zt - width
    while action(far) < 0:
        far = zt - 2 * (zt - far)
    return root_find(action, (far, zt), tol, ctx)


def _variation_start(model: PotentialModel, E: Any, zt: Any, tail_tol: Any, direction: int):
    """z beyond zt where |dk/dz|/|k|² falls to tail_tol."""
    ctx = model.ctx
    mp = ctx.mp
    log_tol = mp.log(tail_tol)

    def criterion(z):
        jet = model.k2_jet_z(E, z, 1)
        k2, dk2 = -jet[0], jet[1]
        absk = mp.sqrt(k2)
        ratio = abs(dk2) / (2 * absk ** 3)
        return mp.log(ratio) - log_tol if ratio else -mp.inf

    width = model.length() * model.scale(E)
    start = zt + direction * width * ctx.mpf("1e-6")
    far = zt + direction * width
    for _ in range(400):
        if criterion(far) < 0:
            break
        far = zt + 2 * (far - zt)
    else:
        raise NotBound("tail variation criterion never met")
    lo, hi = (start, far) if direction > 0 else (far, start)
    return root_find(criterion, (lo, hi), ctx.mpf(10) ** (8 - ctx.digits), ctx)


def energy_term(model: PotentialModel, E: Any):
    """energy_term(E) in k² = energy_term - V_eff; E itself unless the potential depends on E."""
    return model.energy_term(model.ctx.convert(E))


def z_scale(model: PotentialModel, E: Any):
    """Factor with z = z_scale(E)·r."""
    return model.scale(model.ctx.convert(E))


def asymptotic_start(model: PotentialModel, E: Any, tail_tol: Any, side: int = 1) -> Any:
    """Far cutoff z0 (side=+1) or the left cutoff of a forbidden left end (side=-1), in z-units.

    Confining and Coulomb-tailed models use the suppression factor
    exp(-∫|k|) <= tail_tol; short-range ones the tail variation
    |dk/dz|/|k|² <= tail_tol. tail_tol >= 1 returns the turning point itself.
    """
    ctx = model.ctx
    E = ctx.convert(E)
    tail_tol = ctx.convert(tail_tol)
    limit = model.threshold()
    if limit is not None and model.energy_term(E) >= limit:
        raise NotBound(f"E = {ctx.nstr(E, 12)} is not below the continuum threshold")
    a, b = turning_points_z(model, E)
    zt = b if side > 0 else a
    if side < 0 and model.half_line and model.spec.left_boundary == LeftBoundary.REGULAR_ORIGIN:
        raise ConfigError("the left end of a regular-origin model is fixed by the origin series")
    if tail_tol >= 1:
        return zt
    if model.spec.tail == TailCriterion.SUPPRESSION or side < 0 and model.half_line:
        return _suppression_start(model, E, zt, -ctx.mp.log(tail_tol), side)
    return _variation_start(model, E, zt, tail_tol, side)


def left_start(model: PotentialModel, E: Any, tail_tol: Any, r_min_fraction: Any = "1e-3") -> Any:
    """Left end of the integration span in z-units."""
    ctx = model.ctx
    if model.half_line and model.spec.left_boundary == LeftBoundary.REGULAR_ORIGIN:
        _, b = turning_points_z(model, E)
        return b * ctx.convert(r_min_fraction)
    return asymptotic_start(model, E, tail_tol, side=-1)


# === ORIGIN SERIES ===

def origin_series(model: PotentialModel, E: Any, z: Any) -> List[Any]:
    """Frobenius coefficients a_j of the regular solution χ = z^(l+1) Σ a_j z^j.

    Terms are generated until they are negligible at z.
    """
    ctx = model.ctx
    if model.spec.r2v is None:
        raise ConfigError(f"{model.id.value} has no regular series at the origin")
    mp = ctx.mp
    lam = model.units.lam
    l = model.l
    order = 24
    threshold = ctx.eps * ctx.mpf(10) ** (-5)
    while True:
        r0 = Jet.variable(ctx, ctx.mpf(0), order)
        r2v = model.spec.r2v(ctx, model.params, r0).rescale(lam)  # now a jet in z at 0
        h = [-(lam * lam) * c for c in r2v.coeffs]
        h[0] -= l * (l + 1)
        if order >= 2:
            h[2] += model.energy_term(E)
        coeffs = [ctx.mpf(1)]
        for j in range(1, order + 1):
            s = mp.fsum(h[i] * coeffs[j - i] for i in range(1, j + 1))
            coeffs.append(-s / (j * (j + 2 * l + 1)))
        tail = max(abs(coeffs[j] * z ** j) for j in range(order - 3, order + 1))
        if tail < threshold or order >= ORIGIN_SERIES_MAX_ORDER:
            return coeffs
        order *= 2


def regular_logderiv(model: PotentialModel, E: Any, z: Any):
    """y = χ'/χ of the regular solution at small z."""
    coeffs = origin_series(model, E, z)
    mp = model.ctx.mp
    num = mp.fsum(j * c * z ** (j - 1) for j, c in enumerate(coeffs) if j)
    den = mp.fsum(c * z ** j for j, c in enumerate(coeffs))
    return (model.l + 1) / z + num / den


# === REFERENCE ENERGIES ===

def hulthen_sqrt_eps(s: Any, A: Any, n: int, ctx: PrecisionContext):
    """√ε from s(√(ε+A) − √ε) = n + 1; raises NoBoundState at or beyond threshold."""
    u = ctx.mpf(n + 1)
    if A <= 0:
        raise ConfigError("Hulthen strength A must be positive")
    root = (A * s * s - u * u) / (2 * u * s)
    if root <= 0:
        raise NoBoundState(f"Hulthen state n = {n} is not bound for s = {ctx.nstr(s, 10)}, A = {ctx.nstr(A, 10)}")
    return root


def reference_energy(model: PotentialModel, n: int) -> Optional[Any]:
    """Closed-form bound-state energy, or None when the model has none."""
    ctx = model.ctx
    mp = ctx.mp
    p = model.params
    lam = model.units.lam
    if n < 0:
        raise ConfigError("n must be non-negative")
    if model.id == ModelId.HARMONIC:
        return (2 * n + 1) * mp.sqrt(p["c"]) / lam
    if model.id == ModelId.COULOMB:
        return -(lam * p["Z"]) ** 2 / (4 * (n + model.l + 1) ** 2)
    if model.id == ModelId.HULTHEN:
        if model.l != 0:
            return None
        root = hulthen_sqrt_eps(lam * p["a"], p["A"], n, ctx)
        return -root * root
    if model.id == ModelId.MORSE:
        s = lam * p["a"]
        q = s * mp.sqrt(p["D"]) - n - ctx.mpf("0.5")
        if q <= 0:
            raise NoBoundState(f"Morse state n = {n} is beyond the bound spectrum")
        return -(q / s) ** 2
    if model.id == ModelId.POSCHL_TELLER:
        s = lam * p["a"]
        nu = (-1 + mp.sqrt(1 + 4 * s * s * p["V0"])) / 2
        if nu - n <= 0:
            raise NoBoundState(f"Poschl-Teller state n = {n} is beyond the bound spectrum")
        return -((nu - n) / s) ** 2
    return None


def approximate_energy(model: PotentialModel, n: int) -> Optional[Any]:
    """Hydrogenic α → 0 limit of the modified Coulomb level (a seed, not a reference)."""
    if model.id != ModelId.MODIFIED_COULOMB_DIRAC:
        return reference_energy(model, n)
    ctx = model.ctx
    alpha = model.params["alpha"]
    N = n + model.l + 1
    return 1 / ctx.mp.sqrt(1 + alpha * alpha / (4 * N * N))


# === GRID ORACLE ===

def grid_spectrum(model: PotentialModel, count: int, points: int = 400, extent: Optional[float] = None) -> List[float]:
    """Lowest `count` eigenvalues by sinc-DVR diagonalization in double precision.

    Used to validate closed forms independently of the solver.
    """
    if model.energy_dependent:
        raise ConfigError("grid oracle needs an energy-independent potential")
    ctx = model.ctx
    L = float(model.length() * model.units.lam)
    extent = extent or 30.0 * L
    if model.half_line:
        dz = extent / points
        idx = np.arange(1, points + 1)
        z = idx * dz
        i, j = np.meshgrid(idx, idx, indexing="ij")
        sign = np.where((i - j) % 2 == 0, 1.0, -1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            off = 2.0 / (i - j) ** 2 - 2.0 / (i + j) ** 2
        diag = np.pi ** 2 / 3.0 - 1.0 / (2.0 * idx ** 2)
        T = sign * np.where(i == j, 0.0, off)
        T[np.diag_indices(points)] = diag
        T /= dz ** 2
    else:
        z = np.linspace(-extent, extent, points)
        dz = z[1] - z[0]
        idx = np.arange(points)
        i, j = np.meshgrid(idx, idx, indexing="ij")
        sign = np.where((i - j) % 2 == 0, 1.0, -1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            T = sign * 2.0 / (i - j) ** 2
        T[np.diag_indices(points)] = np.pi ** 2 / 3.0
        T /= dz ** 2
    v = np.array([float(model.v_eff_z(ctx.mpf(0), ctx.mpf(float(x)))) for x in z])
    H = T + np.diag(v)
    values = np.linalg.eigvalsh(H)
    return [float(e) for e in values[:count]]
