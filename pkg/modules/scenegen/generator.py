"""modules.scenegen.generator

Deterministic road-scene generator.

Lanes are laid out in BEV meters (x forward, y to the left) with integer
endpoints, so lane succession derived from endpoint distance is exact. Every
random choice draws from ``numpy.random.default_rng(seed)`` in a fixed order:
template, template parameters, filler lanes, traffic elements, SD-map jitter.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.schema import TEMPLATES, SceneConfig
from core.errors import InfeasibleSceneError
from core.logger import get_logger
from modules.scenegen.types import SDMap, Scene, TrafficElement

logger = get_logger("scenegen")

LANE_STRAIGHT, LANE_RAMP, LANE_CONNECTOR = 0, 1, 2

BREAKPOINTS = {2: (-24, 0, 24), 3: (-24, -8, 8, 24)}
LANE_SPACING = 4
FILLER_Y = (-20, -16, 16, 20)
BOX_HALF = 6
ARM_OFFSET = 2
ARM_LENGTH = 24
SD_POINTS = 4
GROUP_RADIUS = 8.5

# (min, max) lanes a template can emit before filler lanes.
TEMPLATE_RANGE = {
    "straight": (2, 9),
    "merge": (3, 3),
    "split": (3, 3),
    "crossroad": (9, 20),
}


@dataclass
class LaneSpec:
    start: Tuple[int, int]
    end: Tuple[int, int]
    control: Optional[Tuple[float, float]]
    kind: int


def sample_lane(spec: LaneSpec, points: int) -> np.ndarray:
    """Evenly parameterized line or quadratic Bezier with exact endpoints."""
    t = np.linspace(0.0, 1.0, points)[:, None]
    p0 = np.asarray(spec.start, dtype=float)
    p2 = np.asarray(spec.end, dtype=float)
    if spec.control is None:
        return p0 + t * (p2 - p0)
    c = np.asarray(spec.control, dtype=float)
    return (1.0 - t) ** 2 * p0 + 2.0 * (1.0 - t) * t * c + t**2 * p2


def _rotate(p: Tuple[int, int], quarter_turns: int) -> Tuple[int, int]:
    x, y = p
    for _ in range(quarter_turns % 4):
        x, y = -y, x
    return (x, y)


def _corner(p: Sequence[float], u: Sequence[float], q: Sequence[float], v: Sequence[float]) -> Optional[Tuple[float, float]]:
    """Intersection of ray ``p + s*u`` with line ``q + r*v``; None when parallel."""
    det = -u[0] * v[1] + u[1] * v[0]
    if abs(det) < 1e-12:
        return None
    dx, dy = q[0] - p[0], q[1] - p[1]
    s = (-dx * v[1] + dy * v[0]) / det
    return (p[0] + s * u[0], p[1] + s * u[1])


def _straight(rng: np.random.Generator, need: int, budget: int) -> List[LaneSpec]:
    options = [(k, s) for k in (1, 2, 3) for s in (2, 3) if k * s <= budget]
    preferred = [o for o in options if o[0] * o[1] >= need] or [max(options, key=lambda o: o[0] * o[1])]
    k, s = preferred[int(rng.integers(len(preferred)))]
    bps = BREAKPOINTS[s]
    lanes = []
    for j in range(k):
        y = LANE_SPACING * j - 2 * (k - 1)
        for t in range(s):
            lanes.append(LaneSpec((bps[t], y), (bps[t + 1], y), None, LANE_STRAIGHT))
    return lanes


def _merge(rng: np.random.Generator, need: int, budget: int) -> List[LaneSpec]:
    xm = int(rng.choice([-4, 0, 4]))
    cx = (-ARM_LENGTH + xm) // 2
    return [
        LaneSpec((-ARM_LENGTH, -8), (xm, 0), (cx, -8), LANE_RAMP),
        LaneSpec((-ARM_LENGTH, 8), (xm, 0), (cx, 8), LANE_RAMP),
        LaneSpec((xm, 0), (ARM_LENGTH, 0), None, LANE_STRAIGHT),
    ]


def _split(rng: np.random.Generator, need: int, budget: int) -> List[LaneSpec]:
    xm = int(rng.choice([-4, 0, 4]))
    cx = (ARM_LENGTH + xm) // 2
    return [
        LaneSpec((-ARM_LENGTH, 0), (xm, 0), None, LANE_STRAIGHT),
        LaneSpec((xm, 0), (ARM_LENGTH, -8), (cx, -8), LANE_RAMP),
        LaneSpec((xm, 0), (ARM_LENGTH, 8), (cx, 8), LANE_RAMP),
    ]


def _crossroad(rng: np.random.Generator, need: int, budget: int) -> List[LaneSpec]:
    four = budget >= 12 and rng.random() < 0.5
    arms = [0, 1, 2, 3] if four else sorted(int(a) for a in rng.choice(4, size=3, replace=False))

    # West arm, then rotated copies: inbound on the right (y < 0), outbound on the left.
    in_lanes = {a: ((-ARM_LENGTH, -ARM_OFFSET), (-BOX_HALF, -ARM_OFFSET)) for a in arms}
    out_lanes = {a: ((-BOX_HALF, ARM_OFFSET), (-ARM_LENGTH, ARM_OFFSET)) for a in arms}
    in_lanes = {a: (_rotate(s, a), _rotate(e, a)) for a, (s, e) in in_lanes.items()}
    out_lanes = {a: (_rotate(s, a), _rotate(e, a)) for a, (s, e) in out_lanes.items()}

    room = budget - 2 * len(arms)
    targets = {a: [b for b in arms if b != a] for a in arms}
    counts = {a: int(rng.integers(1, len(targets[a]) + 1)) for a in arms}
    for a in arms:
        order = rng.permutation(len(targets[a]))
        targets[a] = [targets[a][i] for i in order]
    while sum(counts.values()) > room:
        a = max(arms, key=lambda k: (counts[k], -k))
        counts[a] -= 1
    short = max(0, need - 2 * len(arms) - sum(counts.values()))
    for a in arms:
        while short and counts[a] < len(targets[a]):
            counts[a] += 1
            short -= 1

    lanes = [LaneSpec(in_lanes[a][0], in_lanes[a][1], None, LANE_STRAIGHT) for a in arms]
    lanes += [LaneSpec(out_lanes[a][0], out_lanes[a][1], None, LANE_STRAIGHT) for a in arms]
    for a in arms:
        p, p_prev = in_lanes[a][1], in_lanes[a][0]
        u = np.sign(np.subtract(p, p_prev))
        for b in targets[a][: counts[a]]:
            q, q_next = out_lanes[b]
            v = np.sign(np.subtract(q_next, q))
            lanes.append(LaneSpec(p, q, _corner(p, u, q, v), LANE_CONNECTOR))
    return lanes


TEMPLATE_BUILDERS = {
    "straight": _straight,
    "merge": _merge,
    "split": _split,
    "crossroad": _crossroad,
}


def feasible_templates(cfg: SceneConfig) -> List[str]:
    out = []
    for name in TEMPLATES:
        if cfg.templates.get(name, 0.0) <= 0:
            continue
        lo, hi = TEMPLATE_RANGE[name]
        if lo <= cfg.max_lanes and min(hi, cfg.max_lanes) + len(FILLER_Y) >= cfg.min_lanes:
            out.append(name)
    return out


def lane_adjacency(lanes: Sequence[np.ndarray], eps: float) -> np.ndarray:
    """``a[i, j] = 1`` iff end of lane ``i`` lies within ``eps`` of the start of lane ``j`` (``i != j``)."""
    n = len(lanes)
    a = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        for j in range(n):
            if i != j and np.linalg.norm(lanes[i][-1] - lanes[j][0]) < eps:
                a[i, j] = 1
    return a


def _approach_groups(lanes: Sequence[np.ndarray], a_ll: np.ndarray) -> List[List[int]]:
    """Lanes feeding a junction with no predecessor, grouped by shared stop line."""
    in_deg, out_deg = a_ll.sum(axis=0), a_ll.sum(axis=1)
    groups: List[List[int]] = []
    for i, lane in enumerate(lanes):
        if out_deg[i] == 0 or in_deg[i] != 0:
            continue
        heading = lane[-1] - lane[-2]
        heading = heading / (np.linalg.norm(heading) + 1e-12)
        for g in groups:
            anchor = lanes[g[0]]
            ah = anchor[-1] - anchor[-2]
            ah = ah / (np.linalg.norm(ah) + 1e-12)
            if np.linalg.norm(anchor[-1] - lane[-1]) < GROUP_RADIUS and float(ah @ heading) > 0.1:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _te_size(cls: int) -> Tuple[float, float]:
    return (0.04, 0.10) if cls % 2 == 0 else (0.06, 0.06)


def _place_tes(
    rng: np.random.Generator, lanes: List[np.ndarray], a_ll: np.ndarray, cfg: SceneConfig, c_te: int
) -> Tuple[List[TrafficElement], np.ndarray]:
    groups = _approach_groups(lanes, a_ll)
    n_te = int(rng.integers(cfg.min_tes, cfg.max_tes + 1))
    order = rng.permutation(len(groups))
    anchored = [groups[g] for g in order[:n_te]]
    span = 2.0 * cfg.extent

    tes: List[TrafficElement] = []
    a_lt = np.zeros((len(lanes), n_te), dtype=np.int8)
    for t, group in enumerate(anchored):
        end = np.mean([lanes[i][-1] for i in group], axis=0)
        cls = int(rng.integers(c_te))
        w, h = _te_size(cls)
        cx = float(np.clip(0.5 - 0.8 * end[1] / span + rng.uniform(-0.02, 0.02), 0.05, 0.95))
        cy = float(np.clip(0.45 - 0.3 * (end[0] + cfg.extent) / span + rng.uniform(-0.02, 0.02), 0.05, 0.95))
        tes.append(TrafficElement((cx, cy, w, h), cls))
        a_lt[group, t] = 1
    for _ in range(len(anchored), n_te):
        cls = int(rng.integers(c_te))
        w, h = _te_size(cls)
        tes.append(TrafficElement((float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.08, 0.3)), w, h), cls))
    return tes, a_lt


def _sdmap(rng: np.random.Generator, lanes: List[np.ndarray], kinds: List[int], cfg: SceneConfig) -> SDMap:
    polylines, flags = [], []
    for lane in lanes:
        idx = np.round(np.linspace(0, len(lane) - 1, SD_POINTS)).astype(int)
        pts = lane[idx] + rng.normal(0.0, cfg.sd_jitter, size=(SD_POINTS, 2))
        clipped = np.clip(pts, -cfg.extent, cfg.extent)
        polylines.append(clipped)
        flags.append(not np.array_equal(clipped, pts))
    return SDMap(polylines=polylines, road_type=list(kinds), clipped=flags)


def generate_scene(seed: int, cfg: SceneConfig, points: int = 11, c_te: int = 4) -> Scene:
    """Build one scene as a pure function of ``(seed, cfg, points, c_te)``.

    Raises:
        InfeasibleSceneError: when no enabled template fits the lane bounds
    """
    names = feasible_templates(cfg)
    if not names:
        raise InfeasibleSceneError(
            f"no enabled template yields between {cfg.min_lanes} and {cfg.max_lanes} lanes"
        )
    rng = np.random.default_rng(seed)
    weights = np.array([cfg.templates[n] for n in names], dtype=float)
    template = names[int(rng.choice(len(names), p=weights / weights.sum()))]

    need = max(0, cfg.min_lanes - len(FILLER_Y))
    specs = TEMPLATE_BUILDERS[template](rng, need, cfg.max_lanes)
    fill = max(0, cfg.min_lanes - len(specs))
    for i in rng.permutation(len(FILLER_Y))[:fill]:
        y = FILLER_Y[int(i)]
        specs.append(LaneSpec((-ARM_LENGTH, y), (ARM_LENGTH, y), None, LANE_STRAIGHT))
    if not cfg.min_lanes <= len(specs) <= cfg.max_lanes:
        raise InfeasibleSceneError(f"template '{template}' produced {len(specs)} lanes outside bounds")

    lanes = [sample_lane(s, points) for s in specs]
    kinds = [s.kind for s in specs]
    a_ll = lane_adjacency(lanes, cfg.connect_eps)
    tes, a_lt = _place_tes(rng, lanes, a_ll, cfg, c_te)
    sdmap = _sdmap(rng, lanes, kinds, cfg)
    logger.debug(f"seed={seed} template={template} lanes={len(lanes)} tes={len(tes)} edges={int(a_ll.sum())}")
    return Scene(
        seed=int(seed),
        template=template,
        lanes=lanes,
        tes=tes,
        a_ll=a_ll,
        a_lt=a_lt,
        sdmap=sdmap,
        lane_kinds=kinds,
    )


def generate_scenes(seeds: Sequence[int], cfg: SceneConfig, points: int = 11, c_te: int = 4) -> List[Scene]:
    return [generate_scene(s, cfg, points, c_te) for s in seeds]


def template_counts(scenes: Sequence[Scene]) -> Dict[str, int]:
    counts = {t: 0 for t in TEMPLATES}
    for s in scenes:
        counts[s.template] = counts.get(s.template, 0) + 1
    return counts
