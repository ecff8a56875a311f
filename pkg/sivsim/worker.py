"""Worker pool for sweep points and Monte-Carlo tau points.

Tasks are pure module-level functions applied to picklable arguments.
Results always come back in submission order; only the caller writes files.
"""
import logging
import multiprocessing

logger = logging.getLogger('sivsim')


def map_tasks(func, tasks, jobs=1):
    """Apply ``func`` to every task, in a process pool when jobs > 1.

    If the pool cannot be started (restricted hosts without semaphores or
    fork) the tasks run serially and a warning is logged.
    """
    tasks = list(tasks)
    jobs = max(1, int(jobs or 1))
    if jobs == 1 or len(tasks) < 2:
        return [func(t) for t in tasks]
    processes = min(jobs, len(tasks))
    try:
        pool = multiprocessing.get_context().Pool(processes=processes)
    except (OSError, ValueError) as e:
        logger.warning('Worker pool unavailable (%s); running %s tasks serially', e, len(tasks))
        return [func(t) for t in tasks]
    logger.debug('Running %s tasks on %s processes', len(tasks), processes)
    with pool:
        results = pool.map(func, tasks, chunksize=1)
    return results


def sweep_seed(seed, index):
    """Seed for sweep point ``index``."""
    return int(seed) + 1000 * int(index)
