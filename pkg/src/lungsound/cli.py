"""CLI interface for lungsound."""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import click
import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .config import Config, get_config
from .errors import DataError, LungSoundError, UsageError

console = Console()
err_console = Console(stderr=True)

log = logging.getLogger("lungsound")

PathArg = click.Path(dir_okay=False, path_type=Path)


def _setup_logging(verbosity: int) -> None:
    """Route the package logger through rich: -v INFO, -vv DEBUG."""
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    for handler in [h for h in log.handlers if isinstance(h, RichHandler)]:
        log.removeHandler(handler)
    log.addHandler(RichHandler(console=err_console, show_path=False, rich_tracebacks=False))
    log.setLevel(level)


def _frame_table(df: pd.DataFrame, title: str | None = None, index: str | None = None) -> Table:
    """Render a DataFrame as a rich Table."""
    table = Table(title=title)
    if index is not None:
        table.add_column(index, style="cyan")
    for i, column in enumerate(df.columns):
        justify = "left" if i == 0 and index is None else "right"
        table.add_column(str(column), justify=justify)
    for key, row in df.iterrows():
        cells = [_cell(v) for v in row.tolist()]
        table.add_row(*([str(key)] if index is not None else []), *cells)
    return table


def _cell(value: Any) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _echo_json(data: Any) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def _load_recordings(config: Config, manifest: Path, demographics: Path | None = None):
    from .ingest import apply_demographics, load_demographics, load_manifest

    recordings = load_manifest(manifest, config.get("ingest.delimiter"))
    if demographics:
        recordings = apply_demographics(recordings, load_demographics(demographics))
    return recordings


def _demographic_table(config: Config, enabled, manifest: Path | None, demographics: Path | None):
    """Subject id to demographic vector for a fusion model's auxiliary input."""
    from .ingest import load_demographics
    from .model import demographics_for, encode_demographics

    if manifest:
        return demographics_for(_load_recordings(config, manifest, demographics), enabled)
    if demographics:
        return {
            subject: encode_demographics(age, sex, enabled)
            for subject, (age, sex) in load_demographics(demographics).items()
        }
    raise UsageError("fusion models need --manifest or --demographics for the demographic input")


def _split_durations(train, test, classes: list[str]) -> pd.DataFrame:
    """Seconds per class on each side of a split."""
    rows = [
        {"side": side, "diagnosis": r.diagnosis.value, "duration_s": r.duration_s}
        for side, part in (("train", train), ("test", test))
        for r in part
    ]
    if not rows:
        return pd.DataFrame(0.0, index=pd.Index(classes, name="diagnosis"), columns=["train", "test"])
    return (
        pd.DataFrame(rows)
        .groupby(["diagnosis", "side"])["duration_s"]
        .sum()
        .unstack(fill_value=0.0)
        .reindex(index=classes, columns=["train", "test"], fill_value=0.0)
    )


@click.group()
@click.version_option(version=__version__)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="YAML config file")
@click.option("--seed", type=int, help="Seed for every random choice (overrides config)")
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging")
@click.option("--json", "json_output", is_flag=True, help="Output as JSON")
@click.pass_context
def main(
    ctx: click.Context, config_path: Path | None, seed: int | None, verbose: int, json_output: bool
) -> None:
    """Respiratory sound classification toolkit."""
    ctx.ensure_object(dict)
    _setup_logging(verbose)
    config = get_config(config_path)
    ctx.obj["config"] = config
    ctx.obj["seed"] = int(config.override("seed", seed))
    ctx.obj["json"] = json_output


@main.command()
@click.option("--manifest", "-m", required=True, type=PathArg, help="Recording manifest")
@click.option("--demographics", type=PathArg, help="Demographics table overriding the manifest")
@click.option("--split", "split_path", type=PathArg, help="Split file for per-side durations")
@click.option("--chart", "chart_path", type=PathArg, help="Write the dataset dashboard PNG")
@click.option("--age-chart", "age_chart_path", type=PathArg, help="Write the age-group heatmap PNG")
@click.option("--window-sweep", is_flag=True, help="Frames per class for windows of 1-10 s")
@click.option("--stride", type=float, help="Stride for --window-sweep in seconds")
@click.pass_context
def stats(
    ctx: click.Context,
    manifest: Path,
    demographics: Path | None,
    split_path: Path | None,
    chart_path: Path | None,
    age_chart_path: Path | None,
    window_sweep: bool,
    stride: float | None,
) -> None:
    """Per-class subjects, age groups, devices, durations and cycles."""
    from .audio import window_sweep as sweep_windows
    from .ingest import apply_split, compute_stats, load_split

    config = ctx.obj["config"]
    recordings = _load_recordings(config, manifest, demographics)
    result = compute_stats(recordings, config.get("ingest.age_group_width_years", 10.0))

    split_durations = None
    if split_path:
        train, test = apply_split(recordings, load_split(split_path))
        split_durations = _split_durations(train, test, list(result.class_counts.index))

    sweep = None
    if window_sweep:
        sweep = sweep_windows(
            recordings, range(1, 11), config.override("audio.stride_s", stride)
        )

    if ctx.obj["json"]:
        payload = result.to_dict()
        payload["recordings"] = len(recordings)
        if split_durations is not None:
            payload["split_durations_s"] = {
                side: {k: float(v) for k, v in split_durations[side].items()}
                for side in ("train", "test")
            }
        if sweep is not None:
            payload["window_sweep"] = sweep.to_dict(orient="records")
        _echo_json(payload)
    else:
        summary = pd.DataFrame(
            {
                "Subjects": result.class_counts,
                "Duration (s)": result.class_durations_s,
                "Cycles": result.class_cycle_counts,
                "Unknown age": result.unknown_age_subjects,
            }
        )
        if split_durations is not None:
            summary["Train (s)"] = split_durations["train"]
            summary["Test (s)"] = split_durations["test"]
        console.print(_frame_table(summary, f"{len(recordings)} recordings", index="Class"))

        width = result.age_group_width_years
        ages = result.class_by_age_group.copy()
        ages.columns = [f"{g * width:g}+" for g in ages.columns]
        console.print(_frame_table(ages, "Subjects by age group", index="Class"))
        console.print(_frame_table(result.class_by_device, "Subjects by device", index="Class"))

        cycles = result.cycle_summary.round(3)
        console.print(_frame_table(cycles, "Respiratory cycles", index="Class"))
        if sweep is not None:
            console.print(_frame_table(sweep, "Frames per window length"))

    if chart_path:
        from .charts import chart_dataset

        console.print(
            f"[green]✓ Chart saved:[/green] {chart_dataset(result, chart_path, split_durations)}"
        )
    if age_chart_path:
        from .charts import chart_age_groups

        console.print(f"[green]✓ Chart saved:[/green] {chart_age_groups(result, age_chart_path)}")


@main.command()
@click.option("--manifest", "-m", required=True, type=PathArg, help="Recording manifest")
@click.option("--out-dir", "-o", required=True, type=click.Path(file_okay=False, path_type=Path),
              help="Directory for manifest.tsv, train.tsv, test.tsv and split.yaml")
@click.option("--keep-device", type=str, help="Recording device to keep (default from config)")
@click.option("--drop", "drop_classes", multiple=True, help="Diagnosis to drop (repeatable)")
@click.option("--test-fraction", type=float, help="Per-class share of duration held out for test")
@click.option("--demographics", type=PathArg, help="Demographics table overriding the manifest")
@click.pass_context
def select(
    ctx: click.Context,
    manifest: Path,
    out_dir: Path,
    keep_device: str | None,
    drop_classes: tuple[str, ...],
    test_fraction: float | None,
    demographics: Path | None,
) -> None:
    """Filter to one device, drop classes and split subjects into train/test."""
    from .ingest import (
        Device,
        Diagnosis,
        apply_split,
        save_split,
        select_subset,
        split_subjects,
        write_manifest,
    )

    config = ctx.obj["config"]
    recordings = _load_recordings(config, manifest, demographics)
    try:
        device = Device.parse(config.override("ingest.keep_device", keep_device))
        dropped = [Diagnosis.parse(d) for d in (drop_classes or config.get("ingest.drop_classes"))]
    except ValueError as e:
        raise UsageError(str(e)) from None

    selected = select_subset(recordings, device, dropped)
    split = split_subjects(
        selected, config.override("ingest.test_fraction", test_fraction), ctx.obj["seed"]
    )
    train, test = apply_split(selected, split)

    out_dir.mkdir(parents=True, exist_ok=True)
    written = {
        "manifest": write_manifest(selected, out_dir / "manifest.tsv"),
        "train": write_manifest(train, out_dir / "train.tsv"),
        "test": write_manifest(test, out_dir / "test.tsv"),
        "split": save_split(split, out_dir / "split.yaml"),
    }

    rows = []
    for diagnosis in split.classes:
        side = {
            name: [r for r in part if r.diagnosis == diagnosis]
            for name, part in (("train", train), ("test", test))
        }
        rows.append(
            {
                "Class": diagnosis.value,
                "Train subjects": len({r.subject_id for r in side["train"]}),
                "Test subjects": len({r.subject_id for r in side["test"]}),
                "Train (s)": sum(r.duration_s for r in side["train"]),
                "Test (s)": sum(r.duration_s for r in side["test"]),
            }
        )
    summary = pd.DataFrame(rows)

    if ctx.obj["json"]:
        _echo_json(
            {
                "selected": len(selected),
                "files": {k: str(v) for k, v in written.items()},
                "classes": summary.to_dict(orient="records"),
            }
        )
        return
    console.print(_frame_table(summary, f"{len(selected)} of {len(recordings)} recordings selected"))
    for name, path in written.items():
        console.print(f"[green]✓[/green] {name}: {path}")


@main.command()
@click.option("--manifest", "-m", required=True, type=PathArg, help="Recording manifest")
@click.option("--split", "split_path", type=PathArg, help="Split file selecting one side")
@click.option("--part", type=click.Choice(["train", "test"]), default="train", show_default=True,
              help="Side of --split to frame")
@click.option("--window", type=float, help="Window length in seconds")
@click.option("--stride", type=float, help="Stride in seconds")
@click.option("--rate", type=int, help="Canonical sample rate in Hz")
@click.option("--workers", type=int, default=1, show_default=True, help="Decoding threads")
@click.option("--dtype", type=click.Choice(["float32", "float64"]), default="float32",
              show_default=True, help="Stored sample type")
@click.option("--out", "-o", required=True, type=PathArg, help="Frame tensor file")
@click.pass_context
def frame(
    ctx: click.Context,
    manifest: Path,
    split_path: Path | None,
    part: str,
    window: float | None,
    stride: float | None,
    rate: int | None,
    workers: int,
    dtype: str,
    out: Path,
) -> None:
    """Decode, resample and cut recordings into overlapping frames."""
    from .audio import frames_for_recordings, save_frames
    from .ingest import apply_split, load_split

    config = ctx.obj["config"]
    recordings = _load_recordings(config, manifest)
    if split_path:
        train, test = apply_split(recordings, load_split(split_path))
        recordings = train if part == "train" else test
    if not recordings:
        raise DataError(f"{manifest}: no recordings to frame")

    frames = frames_for_recordings(
        recordings,
        int(config.override("audio.sample_rate_hz", rate)),
        float(config.override("audio.window_s", window)),
        float(config.override("audio.stride_s", stride)),
        workers=max(workers, 1),
    )
    if not frames:
        raise DataError(f"{manifest}: every recording is shorter than the window")
    save_frames(frames, out, dtype)

    per_class = pd.Series([f.label.value for f in frames]).value_counts(sort=False)
    if ctx.obj["json"]:
        _echo_json({"frames": len(frames), "path": str(out),
                    "per_class": {k: int(v) for k, v in per_class.items()}})
        return
    console.print(f"[green]✓[/green] {len(frames)} frames written to {out}")
    for label, count in per_class.items():
        console.print(f"  {label}: {count}")


def _model_config(config: Config, path: Path | None, classes: tuple[str, ...]):
    """Model config from ``path``, or the default network over ``classes``."""
    from .errors import ConfigError
    from .model import ModelConfig, load_model_config

    if path:
        cfg = load_model_config(path)
        unknown = sorted(set(classes) - set(cfg.classes))
        if unknown:
            raise ConfigError(f"{path}: frames carry labels {unknown} outside the model classes")
        return cfg
    return ModelConfig(
        classes=classes,
        window_s=float(config.get("audio.window_s")),
        sample_rate_hz=int(config.get("audio.sample_rate_hz")),
        dtype=config.get("train.dtype", "float32"),
    )


@main.command()
@click.option("--frames", "frames_path", required=True, type=PathArg, help="Training frames")
@click.option("--model-config", "model_config_path", type=PathArg, help="Model YAML")
@click.option("--out", "-o", required=True, type=PathArg, help="Model file to write")
@click.option("--epochs", type=int, help="Maximum epochs")
@click.option("--batch-size", type=int, help="Frames per mini-batch")
@click.option("--lr", "learning_rate", type=float, help="Learning rate")
@click.option("--optimizer", type=click.Choice(["adam", "sgd"]), help="Optimizer")
@click.option("--class-weights/--no-class-weights", default=None,
              help="Weight the loss by inverse class frequency")
@click.option("--manifest", "-m", type=PathArg, help="Manifest with demographics (fusion)")
@click.option("--demographics", type=PathArg, help="Demographics table (fusion)")
@click.option("--chart", "chart_path", type=PathArg, help="Write the loss curve PNG")
@click.pass_context
def train(
    ctx: click.Context,
    frames_path: Path,
    model_config_path: Path | None,
    out: Path,
    epochs: int | None,
    batch_size: int | None,
    learning_rate: float | None,
    optimizer: str | None,
    class_weights: bool | None,
    manifest: Path | None,
    demographics: Path | None,
    chart_path: Path | None,
) -> None:
    """Train a model on a frame file; writes the model and its loss history."""
    from .audio import frame_classes, load_frames
    from .errors import ConfigError
    from .model import build_model
    from .training import TrainConfig
    from .training import train as fit

    config = ctx.obj["config"]
    frames = load_frames(frames_path)
    if not frames:
        raise DataError(f"{frames_path}: no frames")
    model_cfg = _model_config(config, model_config_path, frame_classes(frames))
    if frames[0].length != model_cfg.input_length:
        raise ConfigError(
            f"{frames_path}: frames have {frames[0].length} samples, model '{model_cfg.name}' "
            f"expects {model_cfg.input_length} ({model_cfg.window_s} s at {model_cfg.sample_rate_hz} Hz)"
        )

    cfg = TrainConfig.from_config(
        config,
        seed=ctx.obj["seed"],
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=learning_rate,
        optimizer=optimizer,
        class_weights=class_weights,
    )
    demos = (
        _demographic_table(config, model_cfg.demographics, manifest, demographics)
        if model_cfg.fusion
        else None
    )
    result = fit(build_model(model_cfg), frames, demos, cfg, model_config=model_cfg)

    model_path = result.model.save(out)
    history_path = out.with_name(out.name + ".history.tsv")
    result.history.to_csv(history_path, sep="\t", index=False, lineterminator="\n")
    cost = result.model.cost()

    if ctx.obj["json"]:
        _echo_json(
            {
                "model": str(model_path),
                "history": str(history_path),
                "epochs_run": len(result.history),
                "best_epoch": result.best_epoch,
                "stopped_early": result.stopped_early,
                "validation_subjects": list(result.validation_subjects),
                "params": cost.total_params,
                "flops": cost.total_flops,
            }
        )
    else:
        best = result.history.iloc[result.best_epoch]
        table = Table(title=f"Training: {model_cfg.name}", show_header=False)
        table.add_column("Metric", style="cyan")
        table.add_column("Value", justify="right")
        table.add_row("Frames", str(len(frames)))
        table.add_row("Epochs run", str(len(result.history)))
        table.add_row("Best epoch", str(result.best_epoch))
        table.add_row("Train loss", f"{best['train_loss']:.4f}")
        table.add_row("Train accuracy", f"{best['train_accuracy']:.1%}")
        if not np.isnan(best["val_loss"]):
            table.add_row("Validation loss", f"{best['val_loss']:.4f}")
            table.add_row("Validation accuracy", f"{best['val_accuracy']:.1%}")
        table.add_row("Parameters", f"{cost.total_params:,}")
        table.add_row("FLOPs", f"{cost.total_flops:,}")
        console.print(table)
        console.print(f"[green]✓ Model saved:[/green] {model_path}")
        console.print(f"[green]✓ History saved:[/green] {history_path}")

    if chart_path:
        from .charts import chart_loss

        console.print(f"[green]✓ Chart saved:[/green] {chart_loss(result.history, chart_path)}")


@main.command("eval")
@click.argument("models", nargs=-1, required=True, type=PathArg)
@click.option("--frames", "frames_path", required=True, type=PathArg, help="Test frames")
@click.option("--manifest", "-m", type=PathArg, help="Manifest with demographics (fusion)")
@click.option("--demographics", type=PathArg, help="Demographics table (fusion)")
@click.option("--batch-size", type=int, default=64, show_default=True, help="Frames per batch")
@click.option("--out", "-o", type=PathArg, help="Write the JSON report here")
@click.pass_context
def evaluate_cmd(
    ctx: click.Context,
    models: tuple[Path, ...],
    frames_path: Path,
    manifest: Path | None,
    demographics: Path | None,
    batch_size: int,
    out: Path | None,
) -> None:
    """Score one or more models on a frame file, side by side."""
    from .audio import load_frames
    from .evaluation import comparison_table, evaluate
    from .model import TrainedModel

    config = ctx.obj["config"]
    frames = load_frames(frames_path)
    rows = []
    payload: dict[str, Any] = {"frames": str(frames_path), "models": {}}
    for path in models:
        model = TrainedModel.load(path)
        demos = (
            _demographic_table(config, model.demographics, manifest, demographics)
            if model.fusion
            else None
        )
        report = evaluate(model, frames, demos, batch_size, config.get("audio.normalize", True))
        cost = model.cost()
        name = model.config.name if model.config else path.stem
        if name in payload["models"]:
            name = f"{name} ({path.stem})"
        rows.append((name, report, cost))
        payload["models"][name] = {
            "path": str(path),
            "params": cost.total_params,
            "flops": cost.total_flops,
            "report": report.to_dict(),
        }

    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")

    if ctx.obj["json"]:
        click.echo(text)
        return
    console.print(_frame_table(comparison_table(rows), "Frame-level sensitivity (%)"))
    subject = pd.DataFrame(
        [
            {"Model": name, "Subjects": report.subject.total,
             "Accuracy": round(100 * report.subject.accuracy, 1)}
            for name, report, _ in rows
        ]
    )
    console.print(_frame_table(subject, "Subject-level majority vote (%)"))
    if out:
        console.print(f"[green]✓ Report saved:[/green] {out}")


@main.command()
@click.option("--model", "model_path", type=PathArg, help="Trained model file")
@click.option("--model-config", "model_config_path", type=PathArg,
              help="Model YAML (randomly initialised weights)")
@click.option("--reference", is_flag=True, help="Include the published deployment table")
@click.option("--power-mw", type=float, help="Measured power draw in milliwatts")
@click.option("--power-file", type=PathArg, help="Sensor file holding integer milliwatts")
@click.option("--runs", type=int, help="Measured runs")
@click.option("--warmup", type=int, help="Warm-up runs")
@click.option("--label", type=str, help="Configuration label")
@click.option("--parallel", type=int, help="Also measure throughput with N threads")
@click.option("--format", "fmt", type=click.Choice(["table", "structured"]), default="table",
              show_default=True, help="Report format")
@click.option("--out", "-o", type=PathArg, help="Write the report here")
@click.pass_context
def bench(
    ctx: click.Context,
    model_path: Path | None,
    model_config_path: Path | None,
    reference: bool,
    power_mw: float | None,
    power_file: Path | None,
    runs: int | None,
    warmup: int | None,
    label: str | None,
    parallel: int | None,
    fmt: str,
    out: Path | None,
) -> None:
    """Single-frame latency, performance and energy of a model."""
    from .bench import (
        BenchConfig,
        emit_report,
        make_report,
        measure_latency,
        measure_throughput,
        reference_reports,
    )
    from .model import TrainedModel, build_model, load_model_config
    from .nn import count_cost

    config = ctx.obj["config"]
    if model_path and model_config_path:
        raise UsageError("give either --model or --model-config, not both")

    reports = reference_reports() if reference else []
    if model_path or model_config_path:
        if model_path:
            graph = TrainedModel.load(model_path).graph
        else:
            graph = build_model(load_model_config(model_config_path)).initialize(ctx.obj["seed"])
        cfg = BenchConfig(
            warmup_runs=int(config.override("bench.warmup_runs", warmup)),
            measured_runs=int(config.override("bench.measured_runs", runs)),
            power_mw=config.override("bench.power_mw", power_mw),
            power_file=config.override("bench.power_file", str(power_file) if power_file else None),
            label=config.override("bench.label", label),
        )
        rng = np.random.default_rng(ctx.obj["seed"])
        x = rng.uniform(-1.0, 1.0, size=graph.input_shape)
        aux = {port: np.zeros(width) for port, width in graph.aux_ports.items()}
        latency = measure_latency(graph, x, cfg, aux)
        throughput = (
            measure_throughput(graph, x, parallel, cfg.measured_runs, aux) if parallel else None
        )
        reports.append(
            make_report(cfg.label, count_cost(graph).total_flops, latency,
                        cfg.resolved_power_mw(), throughput)
        )
    if not reports:
        raise UsageError("bench needs --model, --model-config or --reference")

    text = emit_report(reports, "structured" if ctx.obj["json"] else fmt)
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    click.echo(text)
    for r in reports:
        if r.throughput_fps is not None:
            click.echo(f"{r.label}: {r.throughput_fps:.2f} frames/s with {r.workers} threads",
                       err=True)


@main.command()
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--rate", type=int, default=200, show_default=True, help="Sample rate of the WAVs")
@click.pass_context
def fixture(ctx: click.Context, out_dir: Path, rate: int) -> None:
    """Write the synthetic database fixture (WAVs, annotations, manifests, split)."""
    from .synth import write_database_fixture

    paths = write_database_fixture(out_dir, rate, ctx.obj["seed"])
    files = {
        "manifest": paths.manifest,
        "train": paths.train_manifest,
        "test": paths.test_manifest,
        "split": paths.split,
    }
    if ctx.obj["json"]:
        _echo_json({k: str(v) for k, v in files.items()})
        return
    for name, path in files.items():
        console.print(f"[green]✓[/green] {name}: {path}")


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "-o", required=True, type=PathArg, help="Manifest to write")
@click.pass_context
def convert(ctx: click.Context, root: Path, out: Path) -> None:
    """Build a manifest from the public respiratory sound database layout."""
    from .ingest import convert_database

    df = convert_database(root, out)
    if ctx.obj["json"]:
        _echo_json({"manifest": str(out), "recordings": len(df)})
        return
    console.print(f"[green]✓[/green] {len(df)} recordings written to {out}")


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code (1 usage, 2 data, 3 numeric)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        with click.Context(main, info_name="lungsound") as ctx:
            click.echo(main.get_help(ctx))
        return 1
    try:
        result = main.main(args=argv, prog_name="lungsound", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        err_console.print("[yellow]Aborted[/yellow]")
        return 1
    except LungSoundError as e:
        err_console.print(f"[red]Error:[/red] {e}")
        return e.exit_code
    except (FileNotFoundError, IsADirectoryError) as e:
        err_console.print(f"[red]Error:[/red] {e}")
        return DataError.exit_code
    return result if isinstance(result, int) else 0


def entrypoint() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
