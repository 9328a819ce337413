"""modules.sdmap.encoder

Polyline-token encoder for SD maps. Each polyline is clipped to the BEV
extent, resampled to ``points`` positions by arc length and embedded as
sinusoidal coordinate features plus a learned point-index and road-type
embedding. One pre-norm self-attention block runs over the points of each
polyline independently; the token is the mean over points.
"""

import numpy as np

from core.layers import MLP, Embedding, LayerNorm, Linear
from core.module import BaseModule
from core.tensor import Tensor, zeros
from modules.decoder.attention import MultiHeadAttention
from modules.decoder.positional import coordinate_embedding
from modules.scenegen.render import resample_polyline
from modules.scenegen.types import ROAD_TYPES, SDMap

COORD_FREQS = 4


def polyline_points(sdmap: SDMap, points: int, extent: float) -> np.ndarray:
    """Clipped, resampled polylines as ``[M, points, 2]`` scaled into ``[-1, 1]``."""
    clipped = sdmap.clip(extent)
    if not len(clipped):
        return np.zeros((0, points, 2))
    return np.stack([resample_polyline(p, points) for p in clipped.polylines]) / extent


class SDMapEncoder(BaseModule):
    name = "sdmap_encoder"

    def __init__(
        self,
        d: int,
        h: int,
        ffn_width: int,
        rng: np.random.Generator,
        points: int = 8,
        extent: float = 25.0,
    ):
        super().__init__()
        self.coord_proj = Linear(4 * COORD_FREQS, d, rng)
        self.point_embed = Embedding(points, d, rng)
        self.type_embed = Embedding(len(ROAD_TYPES), d, rng)
        self.norm1 = LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, h, rng)
        self.norm2 = LayerNorm(d)
        self.ffn = MLP([d, ffn_width, d], rng, activation="gelu")
        self.norm = LayerNorm(d)
        self._d = d
        self._points = points
        self._extent = extent

    def forward(self, sdmap: SDMap) -> Tensor:
        """Tokens ``[M, d]``; an empty map gives ``[0, d]``."""
        m, t, d = len(sdmap), self._points, self._d
        if m == 0:
            return zeros((0, d))
        pts = polyline_points(sdmap, t, self._extent)
        x = self.coord_proj(Tensor(coordinate_embedding(pts, COORD_FREQS)))
        x = x + self.point_embed()
        road = np.clip(np.asarray(sdmap.road_type, dtype=np.int64), 0, len(ROAD_TYPES) - 1)
        x = x + self.type_embed(road).reshape(m, 1, d).broadcast_to(m, t, d)
        s = self.norm1(x)
        x = x + self.self_attn(s, s, s).out
        x = x + self.ffn(self.norm2(x))
        return self.norm(x.mean(axis=1))


def encode_sdmap(sdmap: SDMap, encoder: SDMapEncoder) -> Tensor:
    return encoder(sdmap)
