"""
Acceptance gates
Each check turns benchmark rows (or a small dedicated computation) into an AcceptanceResult
"""

import logging
from typing import Any, Dict, List, Optional

from expansion import verify_2p_law
from numkernel import NumericalError, PrecisionContext
from potentials import NoBoundState, build_model
from run_models import AcceptanceResult, BenchmarkRow
from spectrum import hulthen_energy, hulthen_qlm_energy, solve_energy
from wkb import wkb_energy

logger = logging.getLogger(__name__)

# === TARGETS ===
QUARTIC_WKB = ("2.32662", "0.00002")
QUARTIC_QLM1 = ("2.39475", "0.0005")
QUARTIC_EXACT = ("2.3936440164823031156", "1e-20")
MODIFIED_COULOMB_EXACT = ("0.99999334014853888012", "1e-19")
MODIFIED_COULOMB_WKB = ("0.9999866800", "1e-9")
MODIFIED_COULOMB_QLM1 = ("0.9999933354", "1e-9")
HULTHEN_EXACT_TOL = "1e-10"
HULTHEN_WKB_GAP = "1e-3"
LAW_DIFF_GAP = "1e-3"
QUADRATIC_EXPONENT = 1.8
WAVEFUNCTION_RATIO = 30.0
ORACLE_TOL = "1e-12"
GRID_TOL = "5e-2"


def _within(name: str, value: Optional[str], target: str, tol: str, relative: bool = False) -> AcceptanceResult:
    ctx = PrecisionContext(50)
    if value is None:
        return AcceptanceResult(name=name, passed=False, threshold=tol, details={"error": "no value"})
    diff = abs(ctx.parse(value) - ctx.parse(target))
    if relative:
        diff = diff / abs(ctx.parse(target))
    return AcceptanceResult(
        name=name,
        passed=bool(diff <= ctx.parse(tol)),
        measured=value,
        threshold=tol,
        details={"target": target, "difference": ctx.nstr(diff, 4)},
    )


def check_quartic(row: BenchmarkRow) -> List[AcceptanceResult]:
    return [
        _within("quartic_wkb", row.e_wkb, *QUARTIC_WKB),
        _within("quartic_qlm1", row.e_qlm1, *QUARTIC_QLM1),
        _within("quartic_qlm6_20_digits", row.e_qlm6, *QUARTIC_EXACT, relative=True),
    ]


def check_modified_coulomb(row: BenchmarkRow) -> List[AcceptanceResult]:
    results = [
        _within("modified_coulomb_qlm6", row.e_qlm6, *MODIFIED_COULOMB_EXACT),
        _within("modified_coulomb_wkb", row.e_wkb, *MODIFIED_COULOMB_WKB),
        _within("modified_coulomb_qlm1", row.e_qlm1, *MODIFIED_COULOMB_QLM1),
    ]
    for result in results:
        result.details["alpha"] = row.extras.get("alpha")
        result.details["contingent_on_alpha"] = True
    return results


def check_quadratic(row: BenchmarkRow) -> AcceptanceResult:
    exponent = row.extras.get("exponent")
    return AcceptanceResult(
        name=f"{row.model}_quadratic_convergence",
        passed=exponent is not None and exponent >= QUADRATIC_EXPONENT,
        measured=None if exponent is None else f"{exponent:.3f}",
        threshold=str(QUADRATIC_EXPONENT),
        details={"norms": row.extras.get("norms", [])},
    )


def check_oracle(row: BenchmarkRow) -> AcceptanceResult:
    """Deepest QLM energy against the closed form, and the closed form against the grid spectrum."""
    solved = row.rel_err_qlm6 is not None and float(row.rel_err_qlm6) <= float(ORACLE_TOL)
    grid = row.extras.get("grid")
    grid_error = None
    if grid is not None and row.reference is not None:
        reference = float(row.reference)
        grid_error = abs(float(grid) - reference) / abs(reference)
    validated = grid_error is not None and grid_error <= float(GRID_TOL)
    return AcceptanceResult(
        name=f"{row.model}_n{row.n}_matches_closed_form",
        passed=solved and validated,
        measured=row.rel_err_qlm6,
        threshold=ORACLE_TOL,
        details={"grid": grid, "grid_error": grid_error, "grid_threshold": GRID_TOL},
    )


def check_hulthen_exactness(cases: List[Dict[str, str]], digits: int) -> AcceptanceResult:
    """Numerically solved first-iterate Hulthen energies equal the closed form; the (n+½) WKB rule does not.

    The residue recurrence of hulthen_qlm_energy rides along as a separate
    analytic detail and does not decide the gate.
    """
    ctx = PrecisionContext(digits)
    tol, gap = ctx.parse(HULTHEN_EXACT_TOL), ctx.parse(HULTHEN_WKB_GAP)
    worst_qlm, closest_wkb = ctx.mpf(0), None
    checked = []
    failures = []
    for case in cases:
        # m = 1/2, ħ = 1: s = a
        s, A = case["s"], case["A"]
        model = build_model("hulthen", {"A": A, "a": s}, 0, None, ctx)
        n = 0
        while True:
            try:
                exact = hulthen_energy(s, A, n, ctx=ctx)
            except NoBoundState:
                break
            state = {"s": s, "A": A, "n": n}
            try:
                qlm1 = solve_energy(model, n, 1).energies[1]
            except NumericalError as e:
                logger.error(f"❌ Hulthen s={s} A={A} n={n}: {e}")
                failures.append(state)
                checked.append({**state, "error": f"{type(e).__name__}: {e}"})
                n += 1
                continue
            err = abs(qlm1 - exact) / abs(exact)
            worst_qlm = max(worst_qlm, err)
            residue_err = abs(hulthen_qlm_energy(s, A, n, 1, ctx=ctx) - exact) / abs(exact)
            try:
                wkb_gap = abs(wkb_energy(model, n) - exact) / abs(exact)
            except NumericalError:
                wkb_gap = None
            if wkb_gap is not None:
                closest_wkb = wkb_gap if closest_wkb is None else min(closest_wkb, wkb_gap)
            checked.append({**state, "qlm1": ctx.nstr(qlm1, 20), "qlm1_error": ctx.nstr(err, 4),
                            "residue_error": ctx.nstr(residue_err, 4),
                            "wkb_error": ctx.nstr(wkb_gap, 4) if wkb_gap is not None else None})
            n += 1
    passed = not failures and bool(checked) and worst_qlm <= tol and (closest_wkb is None or closest_wkb > gap)
    return AcceptanceResult(
        name="hulthen_first_iterate_exact",
        passed=bool(passed),
        measured=ctx.nstr(worst_qlm, 4),
        threshold=HULTHEN_EXACT_TOL,
        details={"states": checked, "closest_wkb_error": ctx.nstr(closest_wkb, 4) if closest_wkb is not None else None},
    )


def check_2p_law(entries: List[Dict[str, Any]], digits: int) -> AcceptanceResult:
    ctx = PrecisionContext(digits)
    gap = ctx.parse(LAW_DIFF_GAP)
    passed = True
    details = []
    for entry in entries:
        model = build_model(entry["id"], entry.get("params"), 0, None, ctx)
        E = ctx.parse(entry["energy"])
        for anchor in entry["anchors"]:
            reports = verify_2p_law(model, E, ctx.parse(anchor), entry.get("p_max", 3))
            matches = [r.exact_matches for r in reports]
            strict = all(r.next_reldiff is not None and r.next_reldiff > gap for r in reports)
            ok = matches == [2 ** r.p for r in reports] and strict
            passed = passed and ok
            details.append({"model": entry["id"], "anchor": anchor, "matches": matches, "strict": strict})
    return AcceptanceResult(name="two_to_the_p_law", passed=passed, threshold="exact_matches == 2^p", details={"runs": details})


def check_wavefunction(ratio: Optional[float]) -> AcceptanceResult:
    return AcceptanceResult(
        name="quartic_wavefunction_ratio",
        passed=ratio is not None and ratio >= WAVEFUNCTION_RATIO,
        measured=None if ratio is None else f"{ratio:.1f}",
        threshold=str(WAVEFUNCTION_RATIO),
    )


def evaluate_rows(rows: List[BenchmarkRow]) -> List[AcceptanceResult]:
    """Row-based gates for every model present in the report."""
    results: List[AcceptanceResult] = []
    for row in rows:
        if not row.success:
            results.append(AcceptanceResult(name=f"{row.model}_row", passed=False, details={"error": row.error}))
            continue
        if row.model == "quartic":
            results.extend(check_quartic(row))
            results.append(check_quadratic(row))
        elif row.model == "modified_coulomb_dirac":
            results.extend(check_modified_coulomb(row))
            results.append(check_quadratic(row))
        elif row.reference is not None:
            results.append(check_oracle(row))
    for result in results:
        mark = "✅" if result.passed else "❌"
        logger.info(f"{mark} {result.name}: measured {result.measured}, threshold {result.threshold}")
    return results
