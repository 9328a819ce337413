"""SD-map teacher: polyline tokens, BEV fusion and feature distillation."""

from .distill import BEVFeaturePair, distill_loss
from .encoder import SDMapEncoder, encode_sdmap, polyline_points
from .fusion import BEVFusion, BEVNeck, fuse_bev

__all__ = [
    "BEVFeaturePair",
    "BEVFusion",
    "BEVNeck",
    "SDMapEncoder",
    "distill_loss",
    "encode_sdmap",
    "fuse_bev",
    "polyline_points",
]
