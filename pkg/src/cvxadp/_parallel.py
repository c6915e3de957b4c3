"""Deterministic work distribution.

All parallelism in the package goes through map_ordered: tasks are pure
functions of their arguments, results are collected in input order, and no
task shares mutable state with another.  Consequently results are identical
for any thread count, which the CLI exposes as --threads.
"""

from concurrent.futures import ThreadPoolExecutor


def map_ordered(fn, items, threads=1):
    """Apply fn to each item, returning results in input order.

    threads <= 1 runs inline (no executor overhead).
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
