"""
Replica fan-out over a process pool.
Results come back ordered by replica index, whatever the worker count.
"""
import logging
import multiprocessing
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

from app.config import get_settings

logger = logging.getLogger(__name__)


def _run_one(job: Tuple[Callable, int, Dict[str, Any]]) -> Tuple[int, Any]:
    task, replica, payload = job
    return replica, task(replica, **payload)


def run_replicas(task: Callable, replicas: int, workers: Optional[int] = None,
                 **payload) -> List[Any]:
    """
    Call task(replica, **payload) for replica = 0..replicas-1.

    Args:
        task: module-level function (it is pickled to the workers)
        replicas: number of replicas
        workers: pool size (settings default); 1 runs in-process
        payload: keyword arguments passed to every call

    Returns:
        Results sorted by replica index
    """
    workers = workers or get_settings().workers
    workers = max(1, min(workers, replicas))
    logger.info("running %d replicas of %s on %d worker(s)", replicas, task.__name__, workers)
    start = time.perf_counter()
    jobs = [(task, r, payload) for r in range(replicas)]
    if workers == 1:
        results = [_run_one(job) for job in jobs]
    else:
        with multiprocessing.Pool(workers) as pool:
            results = list(pool.imap_unordered(_run_one, jobs))
    results.sort(key=lambda r: r[0])
    logger.info("finished %d replicas in %.2fs", replicas, time.perf_counter() - start)
    return [r for _, r in results]
