"""CLI helpers for toporeuse: logging, messages and progress display."""

import logging
from contextlib import contextmanager
from typing import Any, Dict, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn

from core.logger import ROOT_NAME

console = Console()


def verbosity_level(verbose: int, quiet: bool = False) -> str:
    if quiet:
        return "WARNING"
    return "DEBUG" if verbose > 0 else "INFO"


def setup_rich_logging(level: str = "INFO") -> logging.Logger:
    """Route the ``toporeuse`` logger through a single Rich handler at ``level``."""
    log_level = getattr(logging, level.upper(), logging.INFO)

    logger = logging.getLogger(ROOT_NAME)
    for handler in logger.handlers[:]:
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)

    handler = RichHandler(
        console=console,
        rich_tracebacks=True,
        markup=False,
        show_time=True,
        show_level=True,
        show_path=log_level <= logging.DEBUG,
    )
    handler.setFormatter(logging.Formatter(fmt="%(name)s: %(message)s", datefmt="[%X]"))
    handler.setLevel(log_level)

    logger.addHandler(handler)
    # train.log keeps INFO even when the console is quieter
    logger.setLevel(min(log_level, logging.INFO))
    logger.propagate = False
    return logger


def print_success(text: str) -> None:
    console.print(f"[green]✓ {text}[/green]")


def print_error(text: str) -> None:
    """One red line; markup in ``text`` is not interpreted."""
    console.print(f"✗ {text}", style="red", markup=False)


def parse_floats(raw: Optional[str]) -> Optional[list]:
    """``"0.1,1,10"`` -> ``[0.1, 1.0, 10.0]``."""
    if raw is None:
        return None
    return [float(v) for v in raw.split(",") if v.strip()]


def parse_ints(raw: Optional[str]) -> Optional[list]:
    if raw is None:
        return None
    return [int(v) for v in raw.split(",") if v.strip()]


def build_overrides(**values: Any) -> Dict[str, Any]:
    """Nested override mapping from dotted keys, skipping ``None`` values.

    ``build_overrides(**{"optim.steps": 10, "mode": None})`` -> ``{"optim": {"steps": 10}}``
    """
    out: Dict[str, Any] = {}
    for key, value in values.items():
        if value is None:
            continue
        parts = key.split(".")
        cur = out
        for p in parts[:-1]:
            cur = cur.setdefault(p, {})
        cur[parts[-1]] = value
    return out


@contextmanager
def progress_bar(total: int, description: str = "Processing", disable: bool = False):
    """Context manager for a transient progress bar."""
    with Progress(
        SpinnerColumn(),
        BarColumn(),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
        TextColumn("[progress.description]{task.description}"),
        console=console,
        transient=True,
        disable=disable,
    ) as progress:
        task = progress.add_task(description, total=total)

        class ProgressWrapper:
            def update(self, advance: int = 1):
                progress.update(task, advance=advance)

            def set_description(self, new_desc: str):
                progress.update(task, description=new_desc)

        yield ProgressWrapper()
