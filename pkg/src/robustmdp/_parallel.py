import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    """Worker count from ``ROBUSTMDP_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("ROBUSTMDP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def ordered_map(fn, items, threads=None):
    """``list(map(fn, items))``, fanned out over a thread pool when useful."""
    items = list(items)
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) < 2 * threads:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
