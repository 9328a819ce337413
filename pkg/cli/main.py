"""toporeuse command line: gen | train | eval | bench | ablate."""

import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional


# BLAS pools read these once at numpy import, so single-threaded runs pin them first.
def _pin_blas_threads():
    if os.environ.get("TOPOREUSE_THREADS", "").strip() == "1":
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, "1")


_pin_blas_threads()

# Ensure project root is on sys.path so `import config` and other top-level
# packages work when running this file directly (python cli/main.py).
_ROOT = Path(__file__).resolve().parents[1]
if str(_ROOT) not in sys.path:
    sys.path.insert(0, str(_ROOT))

import pyfiglet  # noqa: E402
import typer  # noqa: E402

from cli.helpers import (  # noqa: E402
    build_overrides,
    console,
    parse_floats,
    parse_ints,
    print_error,
    print_success,
    progress_bar,
    setup_rich_logging,
    verbosity_level,
)
from config.loader import load_config  # noqa: E402
from core.errors import CheckpointError, ToporeuseError, exit_code_for  # noqa: E402
from core.logger import get_logger  # noqa: E402
from core.output import print_table, save_output  # noqa: E402
from core.render import render_bench, render_metrics  # noqa: E402

logger = get_logger("cli")
app = typer.Typer(no_args_is_help=True, help="One-stage lane topology reasoning on synthetic road scenes.")


@contextmanager
def _handle_errors():
    """Turn library failures into a red one-liner and the documented exit code."""
    try:
        yield
    except (ToporeuseError, OSError) as e:
        print_error(str(e))
        raise typer.Exit(exit_code_for(e))


@app.callback()
def main(
    ctx: typer.Context,
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="Increase verbosity (-v for debug)"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No banner, warnings and errors only"),
):
    ctx.obj = {"quiet": quiet}
    setup_rich_logging(verbosity_level(verbose, quiet))
    if not quiet:
        console.print(f"[bold cyan]{pyfiglet.figlet_format('toporeuse')}[/bold cyan]")
        console.print("[bold yellow]One-stage lane topology reasoning[/bold yellow]\n")


ConfigOpt = typer.Option(None, "--config", "-c", help="YAML config merged over the defaults")


@app.command("gen")
def gen(
    ctx: typer.Context,
    config: Optional[str] = ConfigOpt,
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Dataset file (default: data.path)"),
    count: Optional[int] = typer.Option(None, "--count", "-n", help="Number of scenes (default: data.count)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="First scene seed (default: data.seed)"),
):
    """Generate synthetic scenes with seeds seed..seed+count-1."""
    from modules.scenegen.dataset import write_dataset
    from modules.scenegen.generator import generate_scene, template_counts

    with _handle_errors():
        cfg = load_config(config, build_overrides(**{"data.count": count, "data.seed": seed}))
        path = out or cfg.data.path
        scenes = []
        with progress_bar(cfg.data.count, "Generating scenes", disable=ctx.obj["quiet"]) as bar:
            for s in range(cfg.data.seed, cfg.data.seed + cfg.data.count):
                scenes.append(generate_scene(s, cfg.scene, cfg.model.points, cfg.model.c_te))
                bar.update()
        counts = template_counts(scenes)
        logger.info("templates: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
        write_dataset(path, scenes, meta={"seed": cfg.data.seed, "count": cfg.data.count, "templates": counts})
    print_success(f"Wrote {len(scenes)} scenes to {path}")


@app.command("train")
def train(
    config: Optional[str] = ConfigOpt,
    data: Optional[str] = typer.Option(None, "--data", "-d", help="Dataset file (default: data.path)"),
    mode: Optional[str] = typer.Option(None, "--mode", "-m", help="teacher|student|nodistill|interactions|baseline2stage"),
    teacher: Optional[str] = typer.Option(None, "--teacher", help="Frozen teacher checkpoint (student mode)"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Total optimizer steps"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Parameter initialization seed"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Run directory (default: <output_dir>/<mode>)"),
    resume: Optional[str] = typer.Option(None, "--resume", help="Checkpoint to continue from"),
):
    """Train one model and write checkpoint.json, loss.csv and train.log."""
    from engine.trainer import CHECKPOINT_NAME, run_training
    from modules.scenegen.dataset import read_dataset

    with _handle_errors():
        overrides = build_overrides(
            **{"mode": mode, "teacher_checkpoint": teacher, "optim.steps": steps, "optim.seed": seed, "data.path": data}
        )
        cfg = load_config(config, overrides)
        scenes = read_dataset(cfg.data.path).scenes
        if cfg.data.train_count is not None:
            scenes = scenes[: cfg.data.train_count]
        run_dir = Path(out) if out else Path(cfg.output_dir) / cfg.mode
        trainer = run_training(cfg, scenes, run_dir, resume=resume)
    last = trainer.history[-1]["total"] if trainer.history else float("nan")
    print_success(f"{cfg.mode}: {trainer.step} steps, final loss {last:.5f}, checkpoint {run_dir / CHECKPOINT_NAME}")


@app.command("eval")
def evaluate_cmd(
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", "-k", help="Trained checkpoint"),
    data: Optional[str] = typer.Option(None, "--data", "-d", help="Dataset file (default: data.path)"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Report directory (default: <output_dir>/eval)"),
    oracle: bool = typer.Option(False, "--oracle", help="Score ground truth fed back as predictions"),
    config: Optional[str] = ConfigOpt,
    svg: bool = typer.Option(True, "--svg/--no-svg", help="Write per-scene SVG renderings"),
):
    """Score a checkpoint (or the oracle) and write metrics.json, metrics.csv and SVGs."""
    from engine.evaluator import evaluate, load_model, write_report
    from modules.scenegen.dataset import read_dataset
    from reports.generator import write_scene_svgs

    with _handle_errors():
        if oracle:
            model = None
            cfg = load_config(config)
        else:
            if not checkpoint:
                raise CheckpointError(None, "--checkpoint is required unless --oracle is given")
            model, cfg = load_model(checkpoint)
        scenes = read_dataset(data or cfg.data.path).scenes
        result = evaluate(scenes, cfg, model)
        out_dir = Path(out) if out else Path(cfg.output_dir) / "eval"
        json_path, _ = write_report(result.report, out_dir)
        if svg and cfg.eval.render_svg:
            write_scene_svgs(
                result.predictions,
                scenes,
                out_dir / "svg",
                cfg.scene.extent,
                limit=cfg.eval.svg_limit,
                iou_threshold=cfg.eval.iou_threshold,
                lane_threshold=cfg.eval.topo_lane_threshold,
            )
    render_metrics(result.report.summary(), title="Oracle" if oracle else "Evaluation")
    print_success(f"Report written to {json_path}")


@app.command("bench")
def bench_cmd(
    config: Optional[str] = ConfigOpt,
    runs: Optional[int] = typer.Option(None, "--runs", help="Timed runs (>= 100)"),
    warmup: Optional[int] = typer.Option(None, "--warmup", help="Warm-up runs (>= 10)"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Write bench.json and bench.csv here"),
):
    """Latency and parameters of the one-stage head versus the two-stage baseline."""
    from engine.benchmark import bench_rows, benchmark_heads

    with _handle_errors():
        cfg = load_config(config, build_overrides(**{"eval.bench_runs": runs, "eval.bench_warmup": warmup}))
        rows = bench_rows(benchmark_heads(cfg))
        if out:
            save_output(str(Path(out) / "bench.json"), rows, quiet=True)
            save_output(str(Path(out) / "bench.csv"), rows, format="csv", quiet=True)
    render_bench(rows)


@app.command("ablate")
def ablate(
    config: Optional[str] = ConfigOpt,
    data: Optional[str] = typer.Option(None, "--data", "-d", help="Dataset file (default: data.path)"),
    seeds: str = typer.Option("0,1,2", "--seeds", help="Comma-separated initialization seeds"),
    lambdas: str = typer.Option("0.1,1,10", "--lambdas", help="Distillation weights for the student sweep"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Optimizer steps per run"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Directory for ablation.json/csv"),
):
    """Teacher, student sweep, no-distillation and interactions runs over several seeds."""
    from engine.ablation import run_ablation, split_scenes
    from modules.scenegen.dataset import read_dataset

    with _handle_errors():
        cfg = load_config(config, build_overrides(**{"data.path": data, "optim.steps": steps}))
        train_scenes, eval_scenes = split_scenes(read_dataset(cfg.data.path).scenes, cfg.data.train_count)
        out_dir = Path(out) if out else Path(cfg.output_dir) / "ablation"
        result = run_ablation(
            cfg, train_scenes, eval_scenes, seeds=parse_ints(seeds), lambdas=parse_floats(lambdas), out_dir=out_dir
        )
    print_table(result.summary(), title="Ablation (means over seeds)")
    print_success(f"Ablation written to {out_dir}")


if __name__ == "__main__":
    app()
