"""Relation resource, gated topology heads, interactions variant and two-stage baseline."""

from .baseline import TwoStageBaseline, baseline_param_count, gated_head_param_count, two_stage_baseline
from .head import GatedFusion, GatedRelationHead, TopologyLogits, gated_relation_logits
from .interactions import InteractionsHead, interactions_variant
from .resource import (
    RelationProjections,
    RelationResource,
    build_concat_qk,
    build_relation_resource,
    relation_features,
    select_task_slices,
)

__all__ = [
    "GatedFusion",
    "GatedRelationHead",
    "InteractionsHead",
    "RelationProjections",
    "RelationResource",
    "TopologyLogits",
    "TwoStageBaseline",
    "baseline_param_count",
    "build_concat_qk",
    "build_relation_resource",
    "gated_head_param_count",
    "gated_relation_logits",
    "interactions_variant",
    "relation_features",
    "select_task_slices",
    "two_stage_baseline",
]
