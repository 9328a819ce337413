"""Fixed sinusoidal encodings for 2-D feature grids and point coordinates."""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np


def sinusoid_1d(positions: np.ndarray, width: int, temperature: float = 10000.0) -> np.ndarray:
    """Interleaved ``[sin, cos]`` features of width ``width`` for each position."""
    positions = np.asarray(positions, dtype=float)
    pairs = (width + 1) // 2
    freqs = temperature ** (-np.arange(pairs) / max(pairs, 1))
    angles = positions[..., None] * freqs
    enc = np.stack([np.sin(angles), np.cos(angles)], axis=-1).reshape(*positions.shape, 2 * pairs)
    return enc[..., :width]


@lru_cache(maxsize=32)
def grid_encoding(shape: Tuple[int, int], d: int) -> np.ndarray:
    """``[H*W, d]`` encoding: first half encodes the row, second half the column."""
    h, w = shape
    half = d // 2
    rows = sinusoid_1d(np.arange(h) * (2 * math.pi / max(h, 1)), half)
    cols = sinusoid_1d(np.arange(w) * (2 * math.pi / max(w, 1)), d - half)
    enc = np.concatenate(
        [np.repeat(rows[:, None, :], w, axis=1), np.repeat(cols[None, :, :], h, axis=0)],
        axis=-1,
    ).reshape(h * w, d)
    enc.flags.writeable = False
    return enc


def coordinate_embedding(points: np.ndarray, freqs: int) -> np.ndarray:
    """Embed normalized coordinates ``[..., 2]`` into ``[..., 4 * freqs]``."""
    scales = (2.0 ** np.arange(freqs)) * math.pi
    angles = points[..., None] * scales
    feats = np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)
    return feats.reshape(*points.shape[:-1], 4 * freqs)
