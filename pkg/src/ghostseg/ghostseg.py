from collections.abc import Callable
from pathlib import Path
from typing import Annotated

import click
import typer
from rich.console import Console

from .commands import (
    EvaluateCommand,
    ParamsCommand,
    PhantomCommand,
    PredictCommand,
    ReportCommand,
    TrainCommand,
)
from .core.exceptions import DataError, GhostSegError, NumericalError
from .utils.logger import get_logger
from .utils.validators import ParameterValidator

console = Console()
logger = get_logger(console)

app = typer.Typer(
    help="Attention GhostUNet++ segmentation: train, evaluate, predict and report",
    add_completion=False,
    no_args_is_help=True,
)


def _run(action: str, fn: Callable[[], object]) -> None:
    """Map package errors onto exit codes: 2 config/usage, 3 data, 4 numerical, 1 anything else."""
    try:
        fn()
    except GhostSegError as e:
        logger.error(e.message)
        if isinstance(e, DataError):
            for item in e.errors[:20]:
                console.print(f"  [red]•[/red] {item}")
            if len(e.errors) > 20:
                console.print(f"  [dim]... and {len(e.errors) - 20} more[/dim]")
        if isinstance(e, NumericalError) and e.diagnostics:
            console.print(f"  [dim]{e.diagnostics}[/dim]")
        raise typer.Exit(code=e.exit_code) from None
    except Exception:
        logger.exception(f"Unexpected error during {action}")
        raise typer.Exit(code=1) from None


@app.command(help="Train a network from a JSON run configuration")
def train(
    config: Annotated[Path, typer.Option("--config", "-c", help="Run configuration (JSON)")],
    seed: Annotated[int | None, typer.Option("--seed", help="Override training.seed")] = None,
    out: Annotated[
        Path | None, typer.Option("--out", "-o", help="Output directory (default: a new per-user run directory)")
    ] = None,
):
    def action():
        ParameterValidator.validate_file_path(config)
        if seed is not None:
            ParameterValidator.validate_seed(seed)
        TrainCommand(console).execute(config, seed, out)

    _run("training", action)


@app.command(name="eval", help="Mean Dice and Jaccard per class on a labelled directory")
def evaluate(
    data: Annotated[Path, typer.Option("--data", "-d", help="Directory with images/ and masks/")],
    checkpoint: Annotated[
        list[Path] | None, typer.Option("--checkpoint", help="Checkpoint directory (repeat to compare)")
    ] = None,
    classes: Annotated[int | None, typer.Option("--classes", help="Number of classes incl. background")] = None,
    oracle: Annotated[bool, typer.Option("--oracle", help="Add a row scoring ground truth against itself")] = False,
    output: Annotated[
        str | None, typer.Option("--output", "-o", help="Write the table to FILE (.csv, .tsv or .json)")
    ] = None,
    file_format: Annotated[
        str | None,
        typer.Option(
            "-fmt",
            "--format",
            click_type=click.Choice(["csv", "tsv", "json"]),
            help="Output file format (default: from the --output suffix)",
        ),
    ] = None,
):
    def action():
        ParameterValidator.validate_directory(data)
        for path in checkpoint or []:
            ParameterValidator.validate_checkpoint(path)
        if classes is not None:
            ParameterValidator.validate_num_classes(classes)
        ParameterValidator.validate_output_path(output or "")
        EvaluateCommand(console).execute(list(checkpoint or []), data, classes, oracle, output, file_format)

    _run("evaluation", action)


@app.command(help="Write predicted label masks for a directory of slices")
def predict(
    checkpoint: Annotated[Path, typer.Option("--checkpoint", help="Checkpoint directory")],
    input_dir: Annotated[Path, typer.Option("--input", "-i", help="Directory of grayscale slices")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Output directory for label PNGs")],
):
    def action():
        ParameterValidator.validate_checkpoint(checkpoint)
        ParameterValidator.validate_directory(input_dir)
        ParameterValidator.validate_output_dir(out)
        PredictCommand(console).execute(checkpoint, input_dir, out)

    _run("prediction", action)


@app.command(help="Render five-panel comparison figures (image, GT, prediction, difference, overlay)")
def report(
    checkpoint: Annotated[Path, typer.Option("--checkpoint", help="Checkpoint directory")],
    input_dir: Annotated[Path, typer.Option("--input", "-i", help="Directory of grayscale slices")],
    gt: Annotated[Path, typer.Option("--gt", help="Directory of ground-truth masks")],
    outdir: Annotated[Path, typer.Option("--outdir", "-o", help="Output directory for figures")],
):
    def action():
        ParameterValidator.validate_checkpoint(checkpoint)
        ParameterValidator.validate_directory(input_dir)
        ParameterValidator.validate_directory(gt)
        ParameterValidator.validate_output_dir(outdir)
        ReportCommand(console).execute(checkpoint, input_dir, gt, outdir)

    _run("report", action)


@app.command(help="Generate a synthetic phantom dataset in the images/masks layout")
def phantom(
    n: Annotated[int, typer.Option("--n", "-n", help="Number of phantoms")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Output dataset directory")],
    spec: Annotated[Path | None, typer.Option("--spec", help="PhantomSpec or run configuration (JSON)")] = None,
    seed: Annotated[int | None, typer.Option("--seed", help="Override phantom.seed")] = None,
):
    def action():
        ParameterValidator.validate_positive(n, "--n")
        if spec is not None:
            ParameterValidator.validate_file_path(spec)
        if seed is not None:
            ParameterValidator.validate_seed(seed)
        ParameterValidator.validate_output_dir(out)
        PhantomCommand(console).execute(spec, n, out, seed)

    _run("phantom generation", action)


@app.command(help="Parameter counts of the ghost network and its dense-convolution twin")
def params(
    config: Annotated[Path | None, typer.Option("--config", "-c", help="Run configuration (JSON)")] = None,
):
    def action():
        if config is not None:
            ParameterValidator.validate_file_path(config)
        ParamsCommand(console).execute(config)

    _run("parameter report", action)


if __name__ == "__main__":
    app()
