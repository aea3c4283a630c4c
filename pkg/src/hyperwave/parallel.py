import os


def worker_count(default=1):
    """Worker cap from ``HYPERWAVE_THREADS`` (default single-threaded)."""
    raw = os.environ.get("HYPERWAVE_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default
