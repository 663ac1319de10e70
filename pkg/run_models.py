"""
Run configuration and result records
Pydantic models shared by the CLI, the HTTP service and the benchmark runner
"""

import logging
from enum import Enum
from typing import Annotated, Any, Dict, List, Optional

import mpmath
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator

from numkernel import DEFAULT_DIGITS, MIN_DIGITS, PrecisionContext
from potentials import PotentialModel, build_model
from qlm import Guess, QlmSettings

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "riccati-qlm/1"


def _decimal(value: Any) -> str:
    """Accept a decimal number as a string; binary floats would lose digits."""
    text = str(value).strip()
    try:
        mpmath.mpf(text)
    except (ValueError, TypeError):
        raise ValueError(f"not a decimal number: {value!r}")
    return text


DecimalStr = Annotated[str, BeforeValidator(_decimal)]


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class UnitsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m: Optional[DecimalStr] = None
    hbar: Optional[DecimalStr] = None


class PotentialSpec(BaseModel):
    """Catalog potential with decimal-string parameters"""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={"example": {"id": "hulthen", "params": {"A": "4", "a": "1"}, "l": 0}},
    )

    id: str
    params: Dict[str, str] = Field(default_factory=dict)
    l: int = Field(0, ge=0)
    units: Optional[UnitsSpec] = None

    @field_validator("params", mode="before")
    @classmethod
    def _params(cls, value: Any) -> Dict[str, str]:
        return {str(k): _decimal(v) for k, v in (value or {}).items()}


class StateSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(0, ge=0)
    l: Optional[int] = Field(None, ge=0)


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ode: Optional[DecimalStr] = None
    root: Optional[DecimalStr] = None
    stop: Optional[DecimalStr] = None


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: OutputFormat = OutputFormat.JSON
    path: Optional[str] = None


class SeriesSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    anchor: DecimalStr = "0.7"
    p_max: int = Field(3, ge=1, le=3)
    energy: Optional[DecimalStr] = None


class WavefunctionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: int = Field(200, ge=2)
    exact_depth: int = Field(10, ge=2)


class RunConfig(BaseModel):
    """One solver run. Unknown keys are rejected."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "potential": {"id": "quartic", "params": {"c": "1"}},
                "state": {"n": 0},
                "p": 6,
                "digits": 50,
                "guess": "langer",
            }
        },
    )

    potential: PotentialSpec
    state: StateSpec = Field(default_factory=StateSpec)
    p: int = Field(6, ge=1)
    digits: int = Field(DEFAULT_DIGITS, ge=MIN_DIGITS)
    escalate_digits: Optional[int] = Field(None, ge=MIN_DIGITS)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    guess: Guess = Guess.LANGER
    output: OutputSpec = Field(default_factory=OutputSpec)
    series: SeriesSpec = Field(default_factory=SeriesSpec)
    wavefunction: WavefunctionSpec = Field(default_factory=WavefunctionSpec)

    @property
    def l(self) -> int:
        return self.state.l if self.state.l is not None else self.potential.l

    def context(self) -> PrecisionContext:
        return PrecisionContext(self.digits)

    def build_model(self, ctx: Optional[PrecisionContext] = None) -> PotentialModel:
        units = self.potential.units.model_dump(exclude_none=True) if self.potential.units else None
        return build_model(self.potential.id, self.potential.params, self.l, units, ctx or self.context())

    def settings(self, ctx: PrecisionContext) -> QlmSettings:
        overrides = {}
        if self.tolerances.ode:
            overrides["ode_tol"] = self.tolerances.ode
        if self.tolerances.stop:
            overrides["stop_tol"] = self.tolerances.stop
        return QlmSettings.for_context(ctx, **overrides)


# === RESULT RECORDS ===

class EnergyBlock(BaseModel):
    wkb: Optional[str] = None
    qlm: Dict[str, str] = Field(default_factory=dict)


class EigenRecord(BaseModel):
    """Energies of one bound state in the riccati-qlm/1 layout"""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(SCHEMA_VERSION, alias="schema")
    model: Dict[str, Any]
    state: Dict[str, int]
    energy: Optional[str] = None
    energies: EnergyBlock = Field(default_factory=EnergyBlock)
    reference: Optional[str] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_result(cls, result: Any, ctx: PrecisionContext) -> "EigenRecord":
        """Build from a spectrum.EigenResult; every number at full precision."""
        fmt = lambda x: ctx.nstr(x, result.digits or ctx.digits)
        diagnostics: Dict[str, Any] = {
            "mismatch": {str(q): ctx.nstr(v, 6) for q, v in result.mismatches.items()},
            "pole_counts": {str(q): c for q, c in result.pole_counts.items()},
            "relative_errors": {k: ctx.nstr(v, 6) for k, v in result.relative_errors().items()},
            "digits": result.digits,
        }
        if result.digits_converged is not None:
            diagnostics["digits_converged"] = round(result.digits_converged, 2)
        if result.report is not None:
            diagnostics["convergence"] = result.report.to_dict(ctx)
        return cls(
            model=result.model,
            state={"n": result.n, "l": result.l},
            energy=fmt(result.energy) if result.energy is not None else None,
            energies=EnergyBlock(
                wkb=fmt(result.wkb_energy) if result.wkb_energy is not None else None,
                qlm={str(q): fmt(E) for q, E in sorted(result.energies.items())},
            ),
            reference=fmt(result.reference) if result.reference is not None else None,
            diagnostics=diagnostics,
        )

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json")


class MatchRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(SCHEMA_VERSION, alias="schema")
    model: Dict[str, Any]
    state: Dict[str, int]
    energy: str
    anchor: str
    reports: List[Dict[str, Any]]
    holds: bool

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json")


class BenchmarkRow(BaseModel):
    """One line of the benchmark table; failures keep success=False and the message."""

    model: str
    n: int
    e_wkb: Optional[str] = None
    e_qlm1: Optional[str] = None
    e_qlm6: Optional[str] = None
    reference: Optional[str] = None
    rel_err_wkb: Optional[str] = None
    rel_err_qlm1: Optional[str] = None
    rel_err_qlm6: Optional[str] = None
    extras: Dict[str, Any] = Field(default_factory=dict)
    success: bool = True
    error: Optional[str] = None
    seconds: Optional[float] = None


class AcceptanceResult(BaseModel):
    name: str
    passed: bool
    measured: Optional[str] = None
    threshold: Optional[str] = None
    details: Dict[str, Any] = Field(default_factory=dict)


class BenchmarkReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(SCHEMA_VERSION, alias="schema")
    digits: int
    rows: List[BenchmarkRow]
    acceptance: List[AcceptanceResult] = Field(default_factory=list)
    timing: Optional[Dict[str, float]] = None

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json", exclude_none=False)


class BenchmarkRequest(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={"example": {"only": ["hulthen", "harmonic"], "digits": 34}},
    )

    only: Optional[List[str]] = None
    digits: int = Field(DEFAULT_DIGITS, ge=MIN_DIGITS)
    timing: bool = True


class JobResponse(BaseModel):
    success: bool
    job_id: str
    status: str


class JobStatusResponse(BaseModel):
    job_id: str
    status: str
    error: Optional[str] = None
    report: Optional[Dict[str, Any]] = None
