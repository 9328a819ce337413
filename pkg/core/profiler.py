"""core.profiler

Latency measurement and timing utilities.
"""

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Sequence

import numpy as np

from core.logger import get_logger

logger = get_logger("profiler")


@dataclass
class LatencyStats:
    """Summary of repeated timed calls, in milliseconds."""

    median_ms: float
    iqr_ms: float
    p25_ms: float
    p75_ms: float
    runs: int
    warmup: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _summarize(samples: Sequence[float], runs: int, warmup: int) -> LatencyStats:
    p25, median, p75 = np.percentile(samples, [25, 50, 75])
    return LatencyStats(
        median_ms=float(median),
        iqr_ms=float(p75 - p25),
        p25_ms=float(p25),
        p75_ms=float(p75),
        runs=runs,
        warmup=warmup,
    )


def measure_latency(fn: Callable[[], Any], warmup: int = 10, runs: int = 100) -> LatencyStats:
    """Time ``fn`` after discarding ``warmup`` calls.

    Args:
        fn: Zero-argument callable to time
        warmup: Untimed leading calls
        runs: Timed calls
    """
    return measure_interleaved([fn], warmup=warmup, runs=runs)[0]


def measure_interleaved(fns: Sequence[Callable[[], Any]], warmup: int = 10, runs: int = 100) -> List[LatencyStats]:
    """Time several callables round-robin so clock and cache drift hit all of them alike.

    Each round calls every function once; the starting function rotates
    between rounds.
    """
    for _ in range(warmup):
        for fn in fns:
            fn()
    samples: List[List[float]] = [[] for _ in fns]
    for r in range(runs):
        for k in range(len(fns)):
            idx = (r + k) % len(fns)
            start = time.perf_counter()
            fns[idx]()
            samples[idx].append((time.perf_counter() - start) * 1000.0)
    stats = [_summarize(s, runs, warmup) for s in samples]
    for st in stats:
        logger.debug(f"latency median={st.median_ms:.3f}ms iqr={st.iqr_ms:.3f}ms over {runs} runs")
    return stats


@contextmanager
def time_block(name: str):
    """Context manager to time a code block.

    Usage:
        with time_block("eval"):
            # code to time
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start
        logger.debug(f"{name}: {elapsed:.3f}s")
