"""BEV feature distillation from a frozen map-conditioned teacher."""

from dataclasses import dataclass

from core.errors import DimensionError
from core.functional import mse_loss
from core.tensor import Tensor


@dataclass
class BEVFeaturePair:
    f_bev_student: Tensor
    f_bev_teacher: Tensor

    def __post_init__(self):
        if self.f_bev_student.shape != self.f_bev_teacher.shape:
            raise DimensionError("bev_feature_pair", self.f_bev_student.shape, self.f_bev_teacher.shape)


def distill_loss(pair: BEVFeaturePair) -> Tensor:
    """Mean squared error; no gradient reaches the teacher side."""
    return mse_loss(pair.f_bev_student, pair.f_bev_teacher.detach())
