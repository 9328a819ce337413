"""modules.model.model

`TopologyModel` wires rendered inputs through the BEV neck (plus SD-map fusion
in map-conditioned modes), the TE and CL decoders, the detection heads and the
topology head selected by the run mode:

- ``teacher``: SD-map fusion, gated heads on the relation resource
- ``student`` / ``nodistill``: no map, gated heads
- ``interactions``: SD-map fusion, gated TECL head, conv/pool CLCL head over full R
- ``baseline2stage``: no map, detached message-passing head
"""

import dataclasses
from typing import Optional

import numpy as np
from scipy.special import expit

from config.schema import MODES, ModelConfig, RunConfig
from core.errors import ConfigError
from core.module import BaseModule
from core.tensor import Tensor, no_grad, set_default_dtype
from modules.decoder.decoder import AttentionTaps, TransformerDecoder, run_cl_decoder, run_te_decoder
from modules.decoder.heads import CLHead, TEHead, cl_head, denormalize_points, te_head
from modules.metrics.report import Prediction
from modules.model.outputs import ModelOutput
from modules.relation.baseline import TwoStageBaseline, two_stage_baseline
from modules.relation.head import GatedRelationHead, TopologyLogits
from modules.relation.interactions import InteractionsHead, interactions_variant
from modules.relation.resource import (
    RelationProjections,
    build_concat_qk,
    build_relation_resource,
    relation_features,
)
from modules.scenegen.dataset import SceneSample
from modules.sdmap.encoder import SDMapEncoder, encode_sdmap
from modules.sdmap.fusion import BEVFusion, BEVNeck, fuse_bev

MAP_MODES = ("teacher", "interactions")


def one_stage_topology(
    taps: AttentionTaps,
    projections: RelationProjections,
    tecl_head: GatedRelationHead,
    clcl_head,
) -> TopologyLogits:
    """Topology logits from attention taps.

    Gated heads score task pairs straight from the row and column halves of the
    relation resource; only the interactions head needs the full ``N x N`` grid.
    """
    Q, K = build_concat_qk(taps, projections)
    rows, cols = relation_features(Q, K, taps.out_te, taps.out_cl, projections)
    t = taps.out_te.shape[0]
    tecl = tecl_head.pairwise(rows[:t], cols[t:])
    if isinstance(clcl_head, InteractionsHead):
        clcl = interactions_variant(build_relation_resource(Q, K, taps.out_te, taps.out_cl, projections), clcl_head)
    else:
        clcl = clcl_head.pairwise(rows[t:], cols[t:])
    return TopologyLogits(tecl=tecl, clcl=clcl)


class TopologyModel(BaseModule):
    name = "topology_model"

    def __init__(
        self,
        cfg: ModelConfig,
        mode: str = "teacher",
        seed: int = 0,
        extent: float = 25.0,
        detach_topology: bool = False,
    ):
        super().__init__()
        if mode not in MODES:
            raise ConfigError(f"unknown mode '{mode}', expected one of {list(MODES)}", key="mode")
        rng = np.random.default_rng(seed)
        d = cfg.d
        self.bev_neck = BEVNeck(d, rng)
        if mode in MAP_MODES:
            self.sd_encoder = SDMapEncoder(d, cfg.h, cfg.ffn_width, rng, points=cfg.sd_points, extent=extent)
            self.bev_fusion = BEVFusion(d, cfg.h, rng)
        self.te_decoder = TransformerDecoder(cfg.L, d, cfg.h, cfg.ffn_width, cfg.n_te, rng)
        self.cl_decoder = TransformerDecoder(cfg.L, d, cfg.h, cfg.ffn_width, cfg.n_cl, rng)
        self.te_head = TEHead(d, cfg.c_te, rng)
        self.cl_head = CLHead(d, cfg.points, rng)
        if mode == "baseline2stage":
            self.baseline = TwoStageBaseline(d, rng)
        else:
            self.projections = RelationProjections(cfg.L, d, rng)
            self.tecl_head = GatedRelationHead(d, rng)
            self.clcl_head = InteractionsHead(d, rng) if mode == "interactions" else GatedRelationHead(d, rng)
        self._cfg = cfg
        self._mode = mode
        self._extent = extent
        self._detach_topology = detach_topology

    @property
    def mode(self) -> str:
        return self._mode

    @property
    def config(self) -> ModelConfig:
        return self._cfg

    @property
    def uses_sdmap(self) -> bool:
        return self._mode in MAP_MODES

    def bev_features(self, sample: SceneSample) -> Tensor:
        """BEV map fed to the CL decoder: neck output, fused with map tokens when available."""
        f_bev = self.bev_neck(sample.f_bev.grid, sample.f_bev.shape)
        if self.uses_sdmap:
            f_bev = fuse_bev(f_bev, encode_sdmap(sample.scene.sdmap, self.sd_encoder), self.bev_fusion)
        return f_bev

    def relate(self, taps: AttentionTaps) -> TopologyLogits:
        if self._mode == "baseline2stage":
            return two_stage_baseline(taps.out_te, taps.out_cl, self.baseline)
        if self._detach_topology:
            taps = taps.detached()
        return one_stage_topology(taps, self.projections, self.tecl_head, self.clcl_head)

    def forward(self, sample: SceneSample) -> ModelOutput:
        f_bev = self.bev_features(sample)
        te = run_te_decoder(sample.f_pv, self.te_decoder)
        cl = run_cl_decoder(dataclasses.replace(sample.f_bev, grid=f_bev), self.cl_decoder)
        te_logits, te_boxes = te_head(te.out, self.te_head)
        cl_fg, cl_points = cl_head(cl.out, self.cl_head)
        taps = AttentionTaps.from_outputs(te, cl)
        return ModelOutput(
            te_logits=te_logits,
            te_boxes=te_boxes,
            cl_fg=cl_fg,
            cl_points=cl_points,
            topology=self.relate(taps),
            f_bev=f_bev,
            taps=taps,
        )

    def predict(self, sample: SceneSample) -> Prediction:
        with no_grad():
            out = self(sample)
        return decode_prediction(out, self._cfg.c_te, self._extent)


def decode_prediction(out: ModelOutput, c_te: int, extent: float) -> Prediction:
    """Probabilities and metric-space lanes from raw outputs."""
    return Prediction(
        te_boxes=np.array(out.te_boxes.numpy()),
        te_class_scores=expit(out.te_logits.numpy()[:, :c_te]),
        lanes=denormalize_points(out.cl_points.numpy(), extent),
        lane_scores=expit(out.cl_fg.numpy()),
        tecl=expit(out.topology.tecl.numpy()),
        clcl=expit(out.topology.clcl.numpy()),
    )


def build_model(cfg: RunConfig, mode: Optional[str] = None, seed: Optional[int] = None) -> TopologyModel:
    """Construct a model for ``cfg``; tensors created afterwards use ``cfg.dtype``."""
    set_default_dtype(cfg.dtype)
    return TopologyModel(
        cfg.model,
        mode=mode or cfg.mode,
        seed=cfg.optim.seed if seed is None else seed,
        extent=cfg.scene.extent,
        detach_topology=cfg.detach_topology,
    )
