"""
Smoke checks against a running solver service.
Usage: python smoke_api.py  (BACKEND_URL defaults to http://localhost:8000)
"""

import os
import sys
import time

import requests
from dotenv import load_dotenv

load_dotenv()

# === CONFIG ===
BACKEND_URL = os.getenv("BACKEND_URL", "http://localhost:8000").rstrip("/")
TIMEOUT = int(os.getenv("SMOKE_TIMEOUT", "300"))


def print_section(title):
    """Print a formatted section header"""
    print("\n" + "="*60)
    print(f"  {title}")
    print("="*60 + "\n")


def check(name, ok, detail=""):
    print(f"{'✅' if ok else '❌'} {name}{': ' + detail if detail else ''}")
    return ok


def smoke_health():
    print_section("Health")
    r = requests.get(f"{BACKEND_URL}/health", timeout=30)
    return check("GET /health", r.status_code == 200 and r.json().get("status") == "healthy", str(r.status_code))


def smoke_wkb():
    print_section("WKB energy (harmonic)")
    body = {"potential": {"id": "harmonic"}, "state": {"n": 0}, "digits": 20}
    r = requests.post(f"{BACKEND_URL}/api/wkb", json=body, timeout=TIMEOUT)
    ok = r.status_code == 200 and abs(float(r.json()["energies"]["wkb"]) - 1.0) < 1e-8
    return check("POST /api/wkb", ok, r.text[:200])


def smoke_solve():
    print_section("QLM energy (hulthen)")
    body = {"potential": {"id": "hulthen", "params": {"A": "4", "a": "1"}}, "state": {"n": 0}, "p": 3, "digits": 20}
    r = requests.post(f"{BACKEND_URL}/api/solve", json=body, timeout=TIMEOUT)
    ok = r.status_code == 200 and abs(float(r.json()["energy"]) + 2.25) < 1e-8
    return check("POST /api/solve", ok, r.text[:200])


def smoke_errors():
    print_section("Error mapping")
    r = requests.post(f"{BACKEND_URL}/api/wkb", json={"potential": {"id": "nope"}}, timeout=30)
    a = check("unknown potential -> 422", r.status_code == 422, str(r.status_code))
    body = {"potential": {"id": "hulthen", "params": {"A": "4", "a": "1"}}, "state": {"n": 3}, "digits": 20}
    r = requests.post(f"{BACKEND_URL}/api/wkb", json=body, timeout=TIMEOUT)
    b = check("no bound state -> 409", r.status_code == 409, str(r.status_code))
    return a and b


def smoke_benchmark_job():
    print_section("Benchmark job")
    r = requests.post(f"{BACKEND_URL}/api/benchmark/jobs", json={"only": ["harmonic"], "digits": 20}, timeout=30)
    if not check("POST /api/benchmark/jobs", r.status_code == 200, r.text[:200]):
        return False
    job_id = r.json()["job_id"]
    deadline = time.time() + TIMEOUT
    while time.time() < deadline:
        status = requests.get(f"{BACKEND_URL}/api/benchmark/jobs/{job_id}", timeout=30).json()
        if status["status"] in ("completed", "failed"):
            return check("benchmark job finished", status["status"] == "completed", status.get("error") or "")
        time.sleep(2)
    return check("benchmark job finished", False, "timed out")


if __name__ == "__main__":
    results = [smoke_health(), smoke_wkb(), smoke_solve(), smoke_errors(), smoke_benchmark_job()]
    print_section(f"{sum(results)}/{len(results)} smoke checks passed")
    sys.exit(0 if all(results) else 1)
