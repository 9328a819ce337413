"""Latency and parameter accounting for relation heads."""

from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple

from core.module import BaseModule
from core.profiler import LatencyStats, measure_interleaved
from core.tensor import no_grad


@dataclass
class BenchResult:
    head: str
    latency: LatencyStats
    param_count: int

    def to_row(self, baseline_ms: float) -> Dict[str, Any]:
        return {
            "head": self.head,
            "params": self.param_count,
            "median_ms": self.latency.median_ms,
            "iqr_ms": self.latency.iqr_ms,
            "relative_speed_pct": relative_speed_pct(self.latency.median_ms, baseline_ms),
        }


def param_count(modules: Iterable[BaseModule]) -> int:
    """Trainable scalars across ``modules``."""
    return sum(m.num_parameters() for m in modules)


def relative_speed_pct(median_ms: float, baseline_ms: float) -> float:
    """Percent speed-up over the baseline, ``(baseline / t - 1) * 100``."""
    return (baseline_ms / median_ms - 1.0) * 100.0


def bench(
    heads: Sequence[Tuple[str, Callable[[], Any], Iterable[BaseModule]]], warmup: int = 10, runs: int = 100
) -> List[BenchResult]:
    """Time each ``(name, fn, modules)`` head without graph recording, interleaved round-robin.

    Returns one result per head, in the given order, with the parameter count of its modules.
    """

    def no_graph(fn):
        def call():
            with no_grad():
                fn()

        return call

    stats = measure_interleaved([no_graph(fn) for _, fn, _ in heads], warmup=warmup, runs=runs)
    return [
        BenchResult(head=name, latency=st, param_count=param_count(modules)) for (name, _, modules), st in zip(heads, stats)
    ]
