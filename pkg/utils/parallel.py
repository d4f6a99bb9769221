import os
from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm

THREADS_ENV = "INTQUANT_THREADS"


def resolve_threads(threads=None):
    """Worker count: explicit value, else INTQUANT_THREADS, else all cores (0 = auto)."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        try:
            threads = int(raw) if raw else 0
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def ordered_map(fn, items, threads=None, progress=False, desc=None):
    """fn over items, results in item order regardless of worker count."""
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    bar = tqdm(total=len(items), desc=desc, disable=not progress, leave=False)
    try:
        if workers == 1:
            results = []
            for item in items:
                results.append(fn(item))
                bar.update(1)
            return results
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = []
            for result in pool.map(fn, items):
                results.append(result)
                bar.update(1)
            return results
    finally:
        bar.close()
