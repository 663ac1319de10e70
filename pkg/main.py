from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import os
import time
import uvicorn
import logging
import asyncio
from typing import List, Dict, Any
from contextlib import asynccontextmanager
from dotenv import load_dotenv

import mpmath
import numpy
from numkernel import ConfigError, NumericalError, DEFAULT_DIGITS, HIGH_DIGITS
from run_models import (
    RunConfig,
    BenchmarkRequest,
    JobResponse,
    JobStatusResponse,
    SCHEMA_VERSION,
)
from cli import run_solve, run_wkb, run_series, run_wavefunction
from job_queue import JobQueue, JobStatus
from benchmark_processor import BenchmarkProcessor

# Import rate limiting
from rate_limiter import limiter, rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(level=getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO))
logger = logging.getLogger(__name__)

# === CONFIG ===
ALLOWED_ORIGINS = os.getenv("ALLOWED_ORIGINS", "*").split(",")
WORKER_POLL_SECONDS = float(os.getenv("QLM_WORKER_POLL_SECONDS", "2"))
SERVICE_VERSION = "1.0.0"

job_queue = JobQueue()
worker_task = None


async def background_worker():
    """Drains benchmark jobs one at a time"""
    logger.info("Background worker started")
    while True:
        try:
            job = job_queue.get_next_job()
            if not job:
                await asyncio.sleep(WORKER_POLL_SECONDS)
                continue
            job_id = job["id"]
            if not job_queue.claim_job(job_id):
                continue
            data = job["job_data"]
            processor = BenchmarkProcessor(digits=data.get("digits"), timing=data.get("timing", True))
            try:
                report = await processor.run(data.get("only"))
                job_queue.update_job_status(job_id, JobStatus.COMPLETED, result_data=report.dump())
                logger.info(f"✅ Benchmark job {job_id} completed")
            except Exception as e:
                logger.error(f"❌ Benchmark job {job_id} failed: {e}")
                job_queue.update_job_status(job_id, JobStatus.FAILED, error_message=str(e))
        except asyncio.CancelledError:
            logger.info("Background worker cancelled")
            break
        except Exception as e:
            logger.error(f"Error in background worker: {e}")
            await asyncio.sleep(WORKER_POLL_SECONDS)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Lifespan context manager for the benchmark worker"""
    global worker_task
    worker_task = asyncio.create_task(background_worker())
    logger.info("✅ Server started, benchmark worker running")

    yield

    if worker_task:
        worker_task.cancel()
        try:
            await worker_task
        except asyncio.CancelledError:
            pass
        logger.info("✅ Background worker stopped")


# FastAPI app
app = FastAPI(
    title="Riccati QLM API",
    description="High-precision bound states by quasilinearization of the Riccati equation",
    version=SERVICE_VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["Content-Type"],
    expose_headers=[]
)

# Add rate limiting
app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, rate_limit_exceeded_handler)


@app.exception_handler(ConfigError)
async def config_error_handler(request: Request, exc: ConfigError):
    logger.warning(f"Configuration error: {exc}")
    return JSONResponse(status_code=422, content={"success": False, "error": str(exc)})


@app.exception_handler(NumericalError)
async def numerical_error_handler(request: Request, exc: NumericalError):
    logger.error(f"❌ {type(exc).__name__}: {exc}")
    return JSONResponse(
        status_code=409,
        content={"success": False, "error": str(exc), "kind": type(exc).__name__}
    )


# Global exception handler for better error handling
@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.error(f"Global exception handler caught: {exc}")
    return JSONResponse(
        status_code=500,
        content={"detail": "Internal server error occurred"}
    )


@app.get("/")
@limiter.limit("60/minute")
async def root(request: Request):
    """Root endpoint with API information"""
    return {
        "message": "Riccati QLM API",
        "version": SERVICE_VERSION,
        "schema": SCHEMA_VERSION,
        "docs": "/docs",
        "health": "/health",
        "commands": ["/api/solve", "/api/wkb", "/api/series", "/api/wavefunction", "/api/benchmark/jobs"],
    }


@app.get("/health")
@limiter.limit("30/minute")
async def health_check(request: Request):
    """Health check endpoint"""
    return {
        "status": "healthy",
        "timestamp": time.time(),
        "versions": {"mpmath": mpmath.__version__, "numpy": numpy.__version__},
        "precision": {"default_digits": DEFAULT_DIGITS, "high_digits": HIGH_DIGITS},
        "benchmark_worker_running": bool(worker_task is not None and not worker_task.done()),
    }


@app.post("/api/solve")
@limiter.limit("10/minute")
async def solve_endpoint(request: Request, body: RunConfig) -> Dict[str, Any]:
    """Bound-state energy per QLM depth"""
    logger.info(f"Solve request: {body.potential.id} n={body.state.n} p={body.p} d={body.digits}")
    return await asyncio.to_thread(run_solve, body)


@app.post("/api/wkb")
@limiter.limit("30/minute")
async def wkb_endpoint(request: Request, body: RunConfig) -> Dict[str, Any]:
    """WKB energy and its error against the closed form when known"""
    return await asyncio.to_thread(run_wkb, body)


@app.post("/api/series")
@limiter.limit("30/minute")
async def series_endpoint(request: Request, body: RunConfig) -> Dict[str, Any]:
    """Match reports of the QLM and WKB g-series"""
    record, _ = await asyncio.to_thread(run_series, body)
    return record


@app.post("/api/wavefunction")
@limiter.limit("5/minute")
async def wavefunction_endpoint(request: Request, body: RunConfig) -> List[Dict[str, Any]]:
    """χ curves as JSON rows"""
    return await asyncio.to_thread(run_wavefunction, body)


@app.post("/api/benchmark/jobs", response_model=JobResponse)
@limiter.limit("5/minute")
async def create_benchmark_job(request: Request, body: BenchmarkRequest):
    """Queue a benchmark run"""
    job = job_queue.create_job("benchmark", body.model_dump())
    return JobResponse(success=True, job_id=job["id"], status=job["status"])


@app.get("/api/benchmark/jobs/{job_id}", response_model=JobStatusResponse)
@limiter.limit("60/minute")
async def get_benchmark_job(request: Request, job_id: str):
    """Status of a queued benchmark run; the report once completed"""
    job = job_queue.get_job_status(job_id)
    if not job:
        raise HTTPException(status_code=404, detail=f"Job {job_id} not found")
    return JobStatusResponse(
        job_id=job["id"],
        status=job["status"],
        error=job["error_message"],
        report=job["result_data"],
    )


if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=int(os.getenv("PORT", "8000")))
