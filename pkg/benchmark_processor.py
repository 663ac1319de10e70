"""
Benchmark Processor
Runs the benchmark rows concurrently in worker threads and assembles the report in a fixed order
"""

import asyncio
import csv
import io
import json
import logging
import os
import time
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from acceptance_checks import check_2p_law, check_hulthen_exactness, check_wavefunction, evaluate_rows
from numkernel import PrecisionContext, QlmError
from potentials import build_model, grid_spectrum
from run_models import AcceptanceResult, BenchmarkReport, BenchmarkRow
from spectrum import wavefunction_curves, wkb_vs_qlm_report

load_dotenv()

logger = logging.getLogger(__name__)

# === CONFIG ===
BENCHMARK_WORKERS = int(os.getenv("QLM_BENCHMARK_WORKERS", "4"))
BENCHMARK_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "benchmark_config.json")
CSV_COLUMNS = [
    "model", "n", "e_wkb", "e_qlm1", "e_qlm6", "reference",
    "rel_err_wkb", "rel_err_qlm1", "rel_err_qlm6", "success", "error",
]


def load_benchmark_config(path: Optional[str] = None) -> Dict[str, Any]:
    with open(path or BENCHMARK_CONFIG, "r", encoding="utf-8") as f:
        return json.load(f)


class BenchmarkProcessor:
    """Computes benchmark rows and acceptance gates"""

    def __init__(
        self,
        config: Optional[Dict[str, Any]] = None,
        digits: Optional[int] = None,
        workers: int = BENCHMARK_WORKERS,
        timing: bool = True,
    ):
        self.config = config or load_benchmark_config()
        self.digits = int(digits or self.config.get("digits", 34))
        self.p = int(self.config.get("p", 6))
        self.workers = max(1, workers)
        self.timing = timing

    async def run(self, only: Optional[List[str]] = None) -> BenchmarkReport:
        """
        Run the selected rows plus the gates that need no row

        Args:
            only: model ids to keep (None keeps every row and every gate)

        Returns:
            BenchmarkReport with rows in configuration order
        """
        started = time.time()
        rows_cfg = [r for r in self.config["rows"] if not only or r["id"] in only]
        semaphore = asyncio.Semaphore(self.workers)

        async def bounded(row_cfg):
            async with semaphore:
                return await asyncio.to_thread(self._compute_row, row_cfg)

        results = await asyncio.gather(*(bounded(r) for r in rows_cfg), return_exceptions=True)
        rows: List[BenchmarkRow] = []
        for row_cfg, result in zip(rows_cfg, results):
            if isinstance(result, Exception):
                logger.error(f"❌ Benchmark row {row_cfg['id']} crashed: {result}")
                rows.append(BenchmarkRow(model=row_cfg["id"], n=row_cfg.get("n", 0), success=False, error=str(result)))
            else:
                rows.append(result)

        acceptance = evaluate_rows(rows)
        acceptance.extend(await self._extra_gates(only))
        report = BenchmarkReport(
            digits=self.digits,
            rows=rows,
            acceptance=acceptance,
            timing={"total_seconds": round(time.time() - started, 3)} if self.timing else None,
        )
        passed = sum(1 for a in acceptance if a.passed)
        logger.info(f"✅ Benchmark finished: {len(rows)} rows, {passed}/{len(acceptance)} gates passed")
        return report

    def _compute_row(self, row_cfg: Dict[str, Any]) -> BenchmarkRow:
        started = time.time()
        name, n = row_cfg["id"], int(row_cfg.get("n", 0))
        try:
            ctx = PrecisionContext(self.digits)
            model = build_model(name, row_cfg.get("params"), int(row_cfg.get("l", 0)), row_cfg.get("units"), ctx)
            result = wkb_vs_qlm_report(model, n, self.p)
            if result.reference is None and row_cfg.get("reference"):
                result.reference = ctx.parse(row_cfg["reference"])
            grid = None
            if result.reference is not None and not model.energy_dependent:
                grid = grid_spectrum(model, n + 1, extent=row_cfg.get("grid_extent"))[n]
            errors = result.relative_errors()
            fmt = lambda x: None if x is None else ctx.nstr(x)
            err = lambda key: ctx.nstr(errors[key], 6) if key in errors else None
            report = result.report
            return BenchmarkRow(
                model=name,
                n=n,
                e_wkb=fmt(result.wkb_energy),
                e_qlm1=fmt(result.energies.get(1)),
                e_qlm6=fmt(result.energies.get(self.p)),
                reference=fmt(result.reference),
                rel_err_wkb=err("wkb"),
                rel_err_qlm1=err("1"),
                rel_err_qlm6=err(str(self.p)),
                extras={
                    "exponent": report.exponent if report else None,
                    "norms": [ctx.nstr(v, 6) for v in report.norms] if report else [],
                    "params": dict(model.raw_params),
                    "alpha": model.raw_params.get("alpha"),
                    "grid": grid,
                },
                seconds=round(time.time() - started, 3) if self.timing else None,
            )
        except QlmError as e:
            logger.error(f"❌ Benchmark row {name} n={n} failed: {e}")
            return BenchmarkRow(model=name, n=n, success=False, error=str(e),
                                seconds=round(time.time() - started, 3) if self.timing else None)

    async def _extra_gates(self, only: Optional[List[str]]) -> List[AcceptanceResult]:
        gates: List[AcceptanceResult] = []
        if not only or "hulthen" in only:
            cases = self.config.get("hulthen_cases", [])
            gates.append(await asyncio.to_thread(check_hulthen_exactness, cases, self.digits))
        law = [e for e in self.config.get("law", []) if not only or e["id"] in only]
        if law:
            gates.append(await asyncio.to_thread(check_2p_law, law, min(self.digits, 34)))
        wf = self.config.get("wavefunction")
        if wf and (not only or wf["id"] in only):
            gates.append(await asyncio.to_thread(self._wavefunction_gate, wf))
        return gates

    def _wavefunction_gate(self, wf: Dict[str, Any]) -> AcceptanceResult:
        try:
            ctx = PrecisionContext(int(wf.get("digits", self.digits)))
            model = build_model(wf["id"], wf.get("params"), 0, None, ctx)
            curves = wavefunction_curves(
                model, int(wf.get("n", 0)), self.p, int(wf.get("exact_depth", 10)), int(wf.get("points", 200))
            )
            return check_wavefunction(curves.bulk_ratio)
        except QlmError as e:
            logger.error(f"❌ Wavefunction gate failed: {e}")
            return AcceptanceResult(name="quartic_wavefunction_ratio", passed=False, details={"error": str(e)})


def rows_to_csv(rows: List[BenchmarkRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.model_dump())
    return buffer.getvalue()
