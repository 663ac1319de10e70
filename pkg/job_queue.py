"""
In-memory job queue
Holds benchmark jobs started through the HTTP service until the background worker drains them
"""

import logging
import threading
import uuid
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

MAX_FINISHED_JOBS = 100


class JobStatus(str, Enum):
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class JobQueue:
    """FIFO of benchmark jobs keyed by uuid"""

    def __init__(self):
        self._jobs: Dict[str, Dict[str, Any]] = {}
        self._order: List[str] = []
        self._lock = threading.Lock()

    def create_job(self, job_type: str, job_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Create a new pending job

        Args:
            job_type: kind of job, e.g. 'benchmark'
            job_data: parameters handed to the worker

        Returns:
            Created job record
        """
        job = {
            "id": str(uuid.uuid4()),
            "job_type": job_type,
            "status": JobStatus.PENDING.value,
            "job_data": job_data,
            "created_at": _now(),
            "started_at": None,
            "completed_at": None,
            "error_message": None,
            "result_data": None,
        }
        with self._lock:
            self._jobs[job["id"]] = job
            self._order.append(job["id"])
            self._prune()
        logger.info(f"Created job {job['id']} of type {job_type}")
        return dict(job)

    def get_next_job(self) -> Optional[Dict[str, Any]]:
        """Oldest pending job, or None"""
        with self._lock:
            for job_id in self._order:
                if self._jobs[job_id]["status"] == JobStatus.PENDING.value:
                    return dict(self._jobs[job_id])
        return None

    def claim_job(self, job_id: str) -> bool:
        """Move a pending job to processing; False if someone else got it first"""
        with self._lock:
            job = self._jobs.get(job_id)
            if not job or job["status"] != JobStatus.PENDING.value:
                return False
            job["status"] = JobStatus.PROCESSING.value
            job["started_at"] = _now()
        logger.info(f"Claimed job {job_id} for processing")
        return True

    def update_job_status(
        self,
        job_id: str,
        status: JobStatus,
        error_message: Optional[str] = None,
        result_data: Optional[Dict[str, Any]] = None,
    ) -> bool:
        with self._lock:
            job = self._jobs.get(job_id)
            if not job:
                logger.error(f"Job {job_id} not found")
                return False
            job["status"] = status.value
            if status in (JobStatus.COMPLETED, JobStatus.FAILED):
                job["completed_at"] = _now()
            if error_message is not None:
                job["error_message"] = error_message
            if result_data is not None:
                job["result_data"] = result_data
        return True

    def get_job_status(self, job_id: str) -> Optional[Dict[str, Any]]:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job else None

    def _prune(self):
        finished = [
            j for j in self._order
            if self._jobs[j]["status"] in (JobStatus.COMPLETED.value, JobStatus.FAILED.value)
        ]
        for job_id in finished[: max(0, len(finished) - MAX_FINISHED_JOBS)]:
            self._order.remove(job_id)
            del self._jobs[job_id]
