import time
from pathlib import Path

from rich.console import Console

from ..core.config import Config, RunConfig
from ..core.exceptions import DataError
from ..models import SegmentationSample
from ..nn.network import build_network
from ..services.dataset import load_dataset, preprocess, split
from ..services.inference import evaluate_network
from ..services.phantom import generate_phantoms
from ..services.training import TrainResult, train
from ..utils.common import FileOperations, ProgressFactory
from ..utils.formatter import MetricsFormatter
from ..utils.logger import get_logger


class TrainCommand:
    def __init__(self, console: Console):
        self.console = console
        self.config = Config()
        self.formatter = MetricsFormatter(self.console)
        self.logger = get_logger(console)

    def execute(self, config_path: Path, seed: int | None = None, out: Path | None = None) -> TrainResult:
        start_time = time.time()

        run_config = RunConfig.from_file(config_path)
        if seed is not None:
            run_config = run_config.with_seed(seed)

        out_dir = FileOperations.ensure_directory(out or self.config.new_run_dir("train"))
        run_config.write_resolved(out_dir)

        samples = self._load_samples(run_config)
        train_set, val_set, test_set = split(samples, run_config.data.split, run_config.training.seed)
        self.console.print(
            f"[green]✓[/green] {len(samples)} samples: "
            f"{len(train_set)} train / {len(val_set)} val / {len(test_set)} test"
        )

        net = build_network(run_config.network, run_config.training.seed)
        metadata = {
            "target_size": run_config.data.target_size,
            "center_crop": run_config.data.center_crop,
            "class_names": list(run_config.data.class_names),
        }

        max_epochs = run_config.training.max_epochs
        with ProgressFactory.create_training_progress(self.console) as progress:
            task = progress.add_task("Training", total=max_epochs, status="")

            def on_epoch(record):
                progress.update(
                    task,
                    completed=record.epoch,
                    status=f"loss {record.train_loss:.4f} val dice {record.val_dice:.4f}",
                )

            result = train(
                net,
                train_set,
                val_set,
                run_config.training,
                out_dir=out_dir,
                policy=run_config.augmentation,
                metadata=metadata,
                on_epoch=on_epoch,
            )

        history = result.history
        self.console.print(
            f"[green]✓[/green] Best val Dice [bold]{history.best_val_dice:.4f}[/bold] at epoch {history.best_epoch} "
            f"({history.stop_reason}, {len(history)} epochs)"
        )
        self.console.print(f"[green]✓[/green] Checkpoint written to [cyan]{result.checkpoint_dir}[/cyan]")

        if test_set:
            record = evaluate_network(net, test_set, run_config.training.batch_size)
            rows = record.to_rows("Attention GhostUNet++", list(run_config.data.class_names))
            self.console.print(self.formatter.format_table(rows, title="Test set"))
            FileOperations.safe_write_json(out_dir / "test_metrics.json", record.to_dict())

        elapsed_time = time.time() - start_time
        self.console.print(f"\n[dim]Trained in {elapsed_time:.2f}s[/dim]")
        return result

    def _load_samples(self, run_config: RunConfig) -> list[SegmentationSample]:
        data = run_config.data
        if data.source == "phantom":
            with self.console.status("[bold blue]Generating phantoms...", spinner="dots"):
                phantoms = generate_phantoms(run_config.phantom, data.phantom_count)
            return [
                preprocess(p.image, p.mask, data.target_size, data.center_crop, p.identifier, p.subject_id)
                for p in phantoms
            ]

        root = run_config.require_data_root()
        with self.console.status(f"[bold blue]Loading {root}...", spinner="dots"):
            loaded = load_dataset(root, data.layout, data.num_classes, data.target_size, data.center_crop)
        if loaded.errors:
            raise DataError(f"{len(loaded.errors)} pairing error(s) under {root}", errors=loaded.errors)  # noqa: TRY003
        if loaded.skipped:
            self.logger.warning(f"Skipped {loaded.skipped} unreadable file pair(s)")
        if not loaded.samples:
            raise DataError(f"No samples found under {root}")  # noqa: TRY003
        return loaded.samples
