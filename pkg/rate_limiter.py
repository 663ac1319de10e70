"""
Rate limiting for the solver service
Solves are CPU-bound, so the defaults are far tighter than for a typical API
"""
import os
import logging

from dotenv import load_dotenv
from fastapi import Request
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address

load_dotenv()

logger = logging.getLogger(__name__)

# === CONFIG ===
DEFAULT_LIMITS = os.getenv("QLM_RATE_LIMITS", "30/minute,300/hour").split(",")
RATE_LIMIT_STORAGE = os.getenv("QLM_RATE_LIMIT_STORAGE", "memory://")
RATE_LIMIT_ENABLED = os.getenv("QLM_RATE_LIMIT_ENABLED", "true").lower() != "false"

limiter = Limiter(
    key_func=get_remote_address,
    default_limits=DEFAULT_LIMITS,
    storage_uri=RATE_LIMIT_STORAGE,
    strategy="fixed-window",
    enabled=RATE_LIMIT_ENABLED,
)


def rate_limit_exceeded_handler(request: Request, exc: RateLimitExceeded):
    """Log and answer 429"""
    logger.warning(f"⚠️ Rate limit exceeded for {get_remote_address(request)} on {request.url.path}: {exc}")
    return _rate_limit_exceeded_handler(request, exc)
