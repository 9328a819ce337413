"""Model assembly for every training mode."""

from .model import MAP_MODES, TopologyModel, build_model, decode_prediction, one_stage_topology
from .outputs import ModelOutput

__all__ = ["MAP_MODES", "ModelOutput", "TopologyModel", "build_model", "decode_prediction", "one_stage_topology"]
