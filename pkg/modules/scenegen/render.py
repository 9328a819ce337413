"""modules.scenegen.render

Scene -> feature-map renderer standing in for an image backbone and view
transform. Lanes are rasterized into a BEV grid, traffic elements into a
perspective-view grid; both are smoothed, lifted to width ``d`` by a fixed
random linear code and perturbed with seeded Gaussian noise.
"""

import math
from typing import Sequence, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from core.tensor import Tensor
from modules.scenegen.types import FeatureMap, Scene

CODE_SEED = 1729
NOISE_STREAM = 7
SMOOTH_SIGMA = 0.6
BEV_CHANNELS = ("occupancy", "cos", "sin", "start", "end")


def pv_channels(c_te: int) -> Tuple[str, ...]:
    return ("occupancy", "center") + tuple(f"class_{k}" for k in range(c_te)) + ("width", "height")


def lift_code(channels: int, d: int, tag: int) -> np.ndarray:
    """Fixed ``[channels, d]`` projection, identical for every scene."""
    return np.random.default_rng([CODE_SEED, tag, d]).normal(size=(channels, d)) / math.sqrt(channels)


def densify(polyline: np.ndarray, step: float) -> Tuple[np.ndarray, np.ndarray]:
    """Resample at roughly ``step`` spacing; returns points and unit tangents."""
    seg = np.diff(polyline, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    if total <= 0:
        return polyline[:1], np.zeros((1, 2))
    s = np.linspace(0.0, total, max(2, int(math.ceil(total / step)) + 1))
    pts = np.stack([np.interp(s, cum, polyline[:, 0]), np.interp(s, cum, polyline[:, 1])], axis=1)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    tangents = seg[idx] / np.maximum(seg_len[idx], 1e-12)[:, None]
    return pts, tangents


def resample_polyline(polyline: np.ndarray, n: int) -> np.ndarray:
    """``n`` points evenly spaced by arc length; endpoints are kept.

    A polyline that already has ``n`` points is returned unchanged.
    """
    polyline = np.asarray(polyline, dtype=float).reshape(-1, 2)
    if len(polyline) == n:
        return polyline.copy()
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(polyline, axis=0), axis=1))])
    if cum[-1] <= 0:
        return np.repeat(polyline[:1], n, axis=0)
    s = np.linspace(0.0, cum[-1], n)
    return np.stack([np.interp(s, cum, polyline[:, 0]), np.interp(s, cum, polyline[:, 1])], axis=1)


def _bev_cell(p: np.ndarray, hw: Tuple[int, int], extent: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    h, w = hw
    r = np.floor((p[:, 0] + extent) / (2 * extent) * h).astype(int)
    c = np.floor((p[:, 1] + extent) / (2 * extent) * w).astype(int)
    ok = (r >= 0) & (r < h) & (c >= 0) & (c < w)
    return r, c, ok


def rasterize_bev(scene: Scene, hw: Tuple[int, int], extent: float) -> np.ndarray:
    """Unsmoothed BEV channels ``[H, W, 5]`` (occupancy, cos, sin, start, end)."""
    h, w = hw
    raster = np.zeros((h, w, len(BEV_CHANNELS)))
    direction = np.zeros((h, w, 2))
    step = 0.25 * min(2 * extent / h, 2 * extent / w)
    for lane in scene.lanes:
        pts, tangents = densify(lane, step)
        r, c, ok = _bev_cell(pts, hw, extent)
        raster[r[ok], c[ok], 0] = 1.0
        np.add.at(direction, (r[ok], c[ok]), tangents[ok])
        for channel, p in ((3, lane[:1]), (4, lane[-1:])):
            rr, cc, good = _bev_cell(p, hw, extent)
            if good[0]:
                raster[rr[0], cc[0], channel] = 1.0
    norm = np.linalg.norm(direction, axis=-1)
    has = norm > 1e-12
    raster[has, 1] = direction[has, 0] / norm[has]
    raster[has, 2] = direction[has, 1] / norm[has]
    return raster


def rasterize_pv(scene: Scene, hw: Tuple[int, int], c_te: int) -> np.ndarray:
    """Unsmoothed PV channels ``[H, W, 4 + c_te]`` over the unit image plane."""
    h, w = hw
    raster = np.zeros((h, w, 4 + c_te))
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    for te in scene.tes:
        cx, cy, bw, bh = te.box
        inside = (np.abs(ys[:, None] - cy) <= bh / 2) & (np.abs(xs[None, :] - cx) <= bw / 2)
        r = min(h - 1, max(0, int(cy * h)))
        c = min(w - 1, max(0, int(cx * w)))
        inside[r, c] = True
        raster[inside, 0] = 1.0
        raster[r, c, 1] = 1.0
        if 0 <= te.cls < c_te:
            raster[inside, 2 + te.cls] = 1.0
        raster[inside, 2 + c_te] = bw
        raster[inside, 3 + c_te] = bh
    return raster


def _finish(raster: np.ndarray, d: int, tag: int, noise: np.ndarray, extent) -> FeatureMap:
    h, w, channels = raster.shape
    smooth = np.stack([gaussian_filter(raster[..., k], SMOOTH_SIGMA, mode="constant") for k in range(channels)], axis=-1)
    signal = smooth.reshape(h * w, channels)
    grid = signal @ lift_code(channels, d, tag) + noise
    return FeatureMap(grid=Tensor(grid), signal=signal, shape=(h, w), extent=extent)


def render_features(
    scene: Scene,
    seed: int,
    noise_level: float,
    d: int,
    bev_hw: Sequence[int] = (16, 16),
    pv_hw: Sequence[int] = (12, 20),
    extent: float = 25.0,
    c_te: int = 4,
) -> Tuple[FeatureMap, FeatureMap]:
    """Return ``(f_pv, f_bev)`` as a pure function of the arguments."""
    bev_hw, pv_hw = tuple(bev_hw), tuple(pv_hw)
    rng = np.random.default_rng([seed, NOISE_STREAM])
    bev_noise = noise_level * rng.normal(size=(bev_hw[0] * bev_hw[1], d))
    pv_noise = noise_level * rng.normal(size=(pv_hw[0] * pv_hw[1], d))
    f_bev = _finish(rasterize_bev(scene, bev_hw, extent), d, 0, bev_noise, (2 * extent, 2 * extent))
    f_pv = _finish(rasterize_pv(scene, pv_hw, c_te), d, 1, pv_noise, (1.0, 1.0))
    return f_pv, f_bev
