"""core.output

Result files (JSON/CSV), console tables and per-run log files.
"""

import csv
import io
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

from rich.console import Console
from rich.table import Table

from core.logger import LOG_FORMAT, ROOT_NAME

console = Console()


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def print_table(rows: Iterable[dict], columns: Optional[List[str]] = None, title: Optional[str] = None):
    """Print dict rows as a rich table; columns default to the first row's keys."""
    rows = list(rows)
    if not rows:
        console.print("[yellow]No rows to display[/yellow]")
        return
    columns = columns or list(rows[0])
    table = Table(show_header=True, title=title)
    for col in columns:
        table.add_column(str(col), justify="left" if col in ("variant", "mode", "head") else "right")
    for r in rows:
        table.add_row(*[_cell(r.get(c)) for c in columns])
    console.print(table)


def _json_text(data: Any) -> str:
    return json.dumps(data, default=str, indent=2) + "\n"


def _csv_text(data: Any) -> str:
    records: Sequence[dict] = [data] if isinstance(data, dict) else list(data)
    fieldnames: List[str] = []
    for record in records:
        fieldnames.extend(k for k in record if k not in fieldnames)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()


def save_output(path: str, data: Any, *, ensure_dir: bool = True, format: str = "json", quiet: bool = False) -> Path:
    """Write ``data`` as JSON or CSV.

    Key order is kept as given and nothing time-dependent is written, so equal
    inputs give identical bytes. The file is replaced atomically.

    Args:
        path: Output file path
        data: Mapping, or list of mappings for CSV
        ensure_dir: Create the parent directory when missing
        format: 'json' or 'csv'
        quiet: Skip the console confirmation
    """
    p = Path(path)
    if ensure_dir:
        p.parent.mkdir(parents=True, exist_ok=True)
    text = _csv_text(data) if format == "csv" else _json_text(data)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, p)
    if not quiet:
        console.print(f"[green]✓ Saved {format.upper()} output to {p}[/green]")
    return p


def setup_file_logging(logfile: Optional[str] = None, log_level: int = logging.INFO) -> Optional[logging.FileHandler]:
    """Append ``toporeuse`` log records to ``logfile``; ``None`` disables it.

    Returns:
        The handler, to be passed to :func:`remove_file_logging` when the run ends
    """
    if not logfile:
        return None
    logpath = Path(logfile)
    logpath.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(logpath, mode="a", encoding="utf-8")
    handler.setLevel(log_level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    logging.getLogger(ROOT_NAME).addHandler(handler)
    return handler


def remove_file_logging(handler: Optional[logging.FileHandler]) -> None:
    if handler is None:
        return
    logging.getLogger(ROOT_NAME).removeHandler(handler)
    handler.close()
