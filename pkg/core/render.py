"""Console rendering utilities for toporeuse.

Metric report and benchmark tables for the CLI.
"""

from __future__ import annotations

from typing import Any, Dict, Iterable

from rich import box
from rich.console import Console
from rich.table import Table

console = Console()


def render_metrics(summary: Dict[str, Any], title: str = "Evaluation") -> Table:
    """Print DET_l / DET_t / TOP_ll / TOP_lt / OLS as percentages."""
    t = Table(title=title, box=box.ROUNDED)
    for col in ("DET_l", "DET_t", "TOP_ll", "TOP_lt", "OLS"):
        t.add_column(col, justify="right")
    t.add_row(*[f"{100.0 * summary[k]:.1f}" for k in ("det_l", "det_t", "top_ll", "top_lt", "ols")])
    console.print(t)
    return t


def render_bench(rows: Iterable[Dict[str, Any]], title: str = "Relation head benchmark") -> Table:
    t = Table(title=title, box=box.ROUNDED)
    for col in ("head", "params", "median ms", "IQR ms", "speed vs baseline"):
        t.add_column(col, justify="right" if col != "head" else "left")
    for r in rows:
        t.add_row(
            str(r["head"]),
            str(r["params"]),
            f"{r['median_ms']:.3f}",
            f"{r['iqr_ms']:.3f}",
            f"{r['relative_speed_pct']:+.1f}%",
        )
    console.print(t)
    return t
