"""Relation-head micro-benchmark: one-stage gated head versus the two-stage baseline.

Both heads see the same random decoder state at matched ``(L, d, N_TE, N_CL)``;
backbone and decoders are excluded from timing and parameter counts.
"""

from typing import Any, Dict, List, Optional

import numpy as np

from config.schema import RunConfig
from core.logger import get_logger
from core.tensor import Tensor
from modules.decoder.decoder import AttentionTaps
from modules.metrics.bench import BenchResult, bench
from modules.model.model import one_stage_topology
from modules.relation.baseline import TwoStageBaseline, two_stage_baseline
from modules.relation.head import GatedRelationHead
from modules.relation.resource import RelationProjections

logger = get_logger("benchmark")


def random_taps(L: int, d: int, n_te: int, n_cl: int, rng: np.random.Generator) -> AttentionTaps:
    return AttentionTaps(
        q_te=Tensor(rng.normal(size=(n_te, L, d))),
        k_te=Tensor(rng.normal(size=(n_te, L, d))),
        q_cl=Tensor(rng.normal(size=(n_cl, L, d))),
        k_cl=Tensor(rng.normal(size=(n_cl, L, d))),
        out_te=Tensor(rng.normal(size=(n_te, d))),
        out_cl=Tensor(rng.normal(size=(n_cl, d))),
    )


def benchmark_heads(
    cfg: RunConfig, warmup: Optional[int] = None, runs: Optional[int] = None, seed: int = 0
) -> List[BenchResult]:
    """Time both heads; the baseline is always the last result."""
    m = cfg.model
    warmup = cfg.eval.bench_warmup if warmup is None else warmup
    runs = cfg.eval.bench_runs if runs is None else runs
    rng = np.random.default_rng(seed)
    taps = random_taps(m.L, m.d, m.n_te, m.n_cl, rng)

    projections = RelationProjections(m.L, m.d, rng)
    tecl_head = GatedRelationHead(m.d, rng)
    clcl_head = GatedRelationHead(m.d, rng)
    baseline = TwoStageBaseline(m.d, rng)

    one_stage_modules = [projections, tecl_head, clcl_head]
    one_stage, two_stage = bench(
        [
            ("one-stage", lambda: one_stage_topology(taps, projections, tecl_head, clcl_head), one_stage_modules),
            ("two-stage baseline", lambda: two_stage_baseline(taps.out_te, taps.out_cl, baseline), [baseline]),
        ],
        warmup=warmup,
        runs=runs,
    )
    logger.info(
        f"one-stage {one_stage.latency.median_ms:.3f}ms/{one_stage.param_count} params, "
        f"two-stage {two_stage.latency.median_ms:.3f}ms/{two_stage.param_count} params"
    )
    return [one_stage, two_stage]


def bench_rows(results: List[BenchResult]) -> List[Dict[str, Any]]:
    baseline_ms = results[-1].latency.median_ms
    return [r.to_row(baseline_ms) for r in results]
