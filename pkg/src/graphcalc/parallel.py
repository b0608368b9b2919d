"""Deterministic fan-out helper.

Work may be spread over threads, but results are always reassembled in
input order, so output is byte-identical for every thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_parallel_map(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
