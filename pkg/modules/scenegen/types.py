"""Scene containers shared by the generator, renderer, dataset IO and metrics."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from core.tensor import Tensor

ROAD_TYPES = ("straight", "ramp", "connector")


@dataclass
class TrafficElement:
    """Front-view box ``(cx, cy, w, h)`` in normalized image coordinates plus attribute class."""

    box: Tuple[float, float, float, float]
    cls: int

    def to_dict(self) -> Dict[str, Any]:
        return {"box": [float(v) for v in self.box], "cls": int(self.cls)}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "TrafficElement":
        return cls(box=tuple(float(v) for v in doc["box"]), cls=int(doc["cls"]))


@dataclass(eq=False)
class SDMap:
    """Coarse road skeleton: polylines in BEV meters with a road type each."""

    polylines: List[np.ndarray] = field(default_factory=list)
    road_type: List[int] = field(default_factory=list)
    clipped: List[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.polylines)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SDMap) or len(self) != len(other):
            return False
        return (
            all(np.array_equal(a, b) for a, b in zip(self.polylines, other.polylines))
            and list(self.road_type) == list(other.road_type)
            and list(self.clipped) == list(other.clipped)
        )

    def translated(self, offset: Tuple[float, float]) -> "SDMap":
        return SDMap(
            polylines=[p + np.asarray(offset, dtype=float) for p in self.polylines],
            road_type=list(self.road_type),
            clipped=list(self.clipped),
        )

    def clip(self, extent: float) -> "SDMap":
        """Clamp points into ``[-extent, extent]``; polylines that moved are flagged."""
        polylines, flags = [], []
        for p, was in zip(self.polylines, self.clipped or [False] * len(self)):
            c = np.clip(p, -extent, extent)
            polylines.append(c)
            flags.append(bool(was or not np.array_equal(c, p)))
        return SDMap(polylines=polylines, road_type=list(self.road_type), clipped=flags)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "polylines": [p.tolist() for p in self.polylines],
            "road_type": [int(t) for t in self.road_type],
            "clipped": [bool(c) for c in self.clipped],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SDMap":
        return cls(
            polylines=[np.asarray(p, dtype=float).reshape(-1, 2) for p in doc["polylines"]],
            road_type=[int(t) for t in doc["road_type"]],
            clipped=[bool(c) for c in doc["clipped"]],
        )


@dataclass(eq=False)
class Scene:
    """Ground truth for one synthetic frame.

    ``a_ll[i, j] = 1`` when lane ``i`` flows into lane ``j``; ``a_lt[i, t] = 1``
    when traffic element ``t`` governs lane ``i``.
    """

    seed: int
    template: str
    lanes: List[np.ndarray]
    tes: List[TrafficElement]
    a_ll: np.ndarray
    a_lt: np.ndarray
    sdmap: SDMap
    lane_kinds: List[int] = field(default_factory=list)

    @property
    def n_lanes(self) -> int:
        return len(self.lanes)

    @property
    def n_tes(self) -> int:
        return len(self.tes)

    def lane_array(self) -> np.ndarray:
        """Lanes stacked as ``[n_l, P, 2]``."""
        if not self.lanes:
            return np.zeros((0, 0, 2))
        return np.stack(self.lanes)

    def te_boxes(self) -> np.ndarray:
        return np.array([t.box for t in self.tes], dtype=float).reshape(-1, 4)

    def te_classes(self) -> np.ndarray:
        return np.array([t.cls for t in self.tes], dtype=np.int64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scene):
            return False
        return (
            self.seed == other.seed
            and self.template == other.template
            and len(self.lanes) == len(other.lanes)
            and all(np.array_equal(a, b) for a, b in zip(self.lanes, other.lanes))
            and self.tes == other.tes
            and np.array_equal(self.a_ll, other.a_ll)
            and np.array_equal(self.a_lt, other.a_lt)
            and self.sdmap == other.sdmap
            and list(self.lane_kinds) == list(other.lane_kinds)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": int(self.seed),
            "template": self.template,
            "lanes": [lane.tolist() for lane in self.lanes],
            "lane_kinds": [int(k) for k in self.lane_kinds],
            "tes": [t.to_dict() for t in self.tes],
            "a_ll": self.a_ll.astype(int).tolist(),
            "a_lt": self.a_lt.astype(int).tolist(),
            "sdmap": self.sdmap.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "Scene":
        lanes = [np.asarray(lane, dtype=float).reshape(-1, 2) for lane in doc["lanes"]]
        n_l, n_te = len(lanes), len(doc["tes"])
        return cls(
            seed=int(doc["seed"]),
            template=str(doc["template"]),
            lanes=lanes,
            tes=[TrafficElement.from_dict(t) for t in doc["tes"]],
            a_ll=np.asarray(doc["a_ll"], dtype=np.int8).reshape(n_l, n_l),
            a_lt=np.asarray(doc["a_lt"], dtype=np.int8).reshape(n_l, n_te),
            sdmap=SDMap.from_dict(doc["sdmap"]),
            lane_kinds=[int(k) for k in doc.get("lane_kinds", [])],
        )


@dataclass
class FeatureMap:
    """Rendered stand-in for a backbone feature map.

    ``grid`` is ``[H*W, d]`` (row-major over ``shape``); ``signal`` holds the
    pre-lift rasterized channels ``[H*W, C]``.
    """

    grid: Tensor
    signal: np.ndarray
    shape: Tuple[int, int]
    extent: Tuple[float, float]

    @property
    def d(self) -> int:
        return self.grid.shape[-1]
