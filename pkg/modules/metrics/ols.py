"""Aggregate lane-topology score and the published comparison rows."""

import math
from typing import Dict, NamedTuple

from core.errors import MetricRangeError

RANGE_TOLERANCE = 1e-9


class PublishedRow(NamedTuple):
    """Component scores and printed aggregate, in percent."""

    det_l: float
    det_t: float
    top_ll: float
    top_lt: float
    ols: float


PUBLISHED_ROWS: Dict[str, PublishedRow] = {
    "SMERF": PublishedRow(31.1, 48.6, 16.2, 27.1, 43.0),
    "Teacher": PublishedRow(33.5, 49.4, 17.1, 28.2, 44.3),
    "STSU": PublishedRow(12.7, 43.0, 2.9, 19.8, 29.3),
    "VectorMapNet": PublishedRow(11.1, 41.7, 2.7, 9.2, 24.9),
    "MapTR": PublishedRow(8.3, 43.5, 2.3, 8.9, 24.2),
    "MapTR (Chamfer)": PublishedRow(17.7, 43.5, 5.9, 15.1, 31.0),
    "TopoNet": PublishedRow(28.6, 48.6, 10.9, 23.8, 39.8),
    "Student": PublishedRow(30.2, 48.7, 11.0, 25.2, 40.6),
    "No distillation": PublishedRow(29.6, 47.8, 10.5, 24.7, 39.9),
    "Interactions": PublishedRow(33.0, 47.1, 16.6, 25.8, 42.9),
    "TopoNet (subset B)": PublishedRow(24.4, 52.6, 6.7, 16.7, 36.0),
    "No distillation (subset B)": PublishedRow(25.4, 55.5, 6.9, 16.5, 37.0),
}


def _component(name: str, value: float) -> float:
    value = float(value)
    if not (-RANGE_TOLERANCE <= value <= 1.0 + RANGE_TOLERANCE):
        raise MetricRangeError(name, value)
    return min(1.0, max(0.0, value))


def ols(det_l: float, det_t: float, top_ll: float, top_lt: float) -> float:
    """``(det_l + det_t + sqrt(top_ll) + sqrt(top_lt)) / 4``.

    Raises:
        MetricRangeError: a component lies outside [0, 1] beyond float tolerance
    """
    dl = _component("det_l", det_l)
    dt = _component("det_t", det_t)
    tll = _component("top_ll", top_ll)
    tlt = _component("top_lt", top_lt)
    return 0.25 * (dl + dt + math.sqrt(tll) + math.sqrt(tlt))


def published_ols(row: PublishedRow) -> float:
    """Recompute a published aggregate (percent) from its components."""
    return 100.0 * ols(row.det_l / 100.0, row.det_t / 100.0, row.top_ll / 100.0, row.top_lt / 100.0)
