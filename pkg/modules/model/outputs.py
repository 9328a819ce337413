from dataclasses import dataclass
from typing import Optional

from core.tensor import Tensor
from modules.decoder.decoder import AttentionTaps
from modules.relation.head import TopologyLogits


@dataclass
class ModelOutput:
    """Raw per-query outputs of one forward pass.

    ``f_bev`` is the BEV map the CL decoder attended over: the neck output for
    map-free modes, the fused neck output for map-conditioned modes.
    """

    te_logits: Tensor
    te_boxes: Tensor
    cl_fg: Tensor
    cl_points: Tensor
    topology: TopologyLogits
    f_bev: Tensor
    taps: Optional[AttentionTaps] = None

    @property
    def n_te(self) -> int:
        return self.te_logits.shape[0]

    @property
    def n_cl(self) -> int:
        return self.cl_fg.shape[0]
