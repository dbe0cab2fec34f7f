from pathlib import Path

from rich.console import Console

from ..core.exceptions import ConfigurationError, DataError
from ..models import MetricsRow
from ..nn.checkpoint import CheckpointHeader, load_checkpoint
from ..services.dataset import DatasetLoadResult, load_dataset
from ..services.inference import predict_masks
from ..services.metrics import evaluate
from ..utils.formatter import MetricsFormatter

DEFAULT_CLASS_NAMES = ["background", "VAT", "SAT", "liver"]


class EvaluateCommand:
    def __init__(self, console: Console):
        self.console = console
        self.formatter = MetricsFormatter(self.console)

    def execute(
        self,
        checkpoints: list[Path],
        data: Path,
        classes: int | None = None,
        oracle: bool = False,
        output: str | None = None,
        file_format: str | None = None,
    ) -> list[MetricsRow]:
        if not checkpoints and not oracle:
            raise ConfigurationError("Nothing to evaluate: pass --checkpoint and/or --oracle")  # noqa: TRY003

        loaded = [load_checkpoint(path) for path in checkpoints]
        num_classes = self._resolve_classes(classes, [header for _, header in loaded])
        class_names = self._class_names(num_classes, [header for _, header in loaded])

        rows: list[MetricsRow] = []
        cache: dict[tuple, DatasetLoadResult] = {}

        if oracle:
            dataset = self._load(data, num_classes, None, None, cache)
            masks = [s.mask for s in dataset.samples]
            rows += evaluate(masks, masks, num_classes).to_rows("oracle", class_names)

        for path, (net, header) in zip(checkpoints, loaded):
            target_size = header.metadata.get("target_size")
            center_crop = header.metadata.get("center_crop")
            dataset = self._load(data, num_classes, target_size, center_crop, cache)
            predictions = predict_masks(net, [s.image for s in dataset.samples])
            record = evaluate(predictions, [s.mask for s in dataset.samples], num_classes)
            rows += record.to_rows(path.name if len(checkpoints) > 1 else "Attention GhostUNet++", class_names)

        self.console.print(self.formatter.format_table(rows, title=f"Mean Dice and Jaccard ({data})"))
        if output:
            self.formatter.write_to_file(rows, output, file_format)
        return rows

    @staticmethod
    def _resolve_classes(classes: int | None, headers: list[CheckpointHeader]) -> int:
        spec_classes = {header.network.num_classes for header in headers}
        if len(spec_classes) > 1:
            raise ConfigurationError(f"Checkpoints disagree on num_classes: {sorted(spec_classes)}")  # noqa: TRY003
        if classes is not None and spec_classes and classes not in spec_classes:
            raise ConfigurationError(  # noqa: TRY003
                f"--classes {classes} does not match the checkpoint's num_classes {spec_classes.pop()}"
            )
        if classes is not None:
            return classes
        if spec_classes:
            return spec_classes.pop()
        raise ConfigurationError("--classes is required when no checkpoint is given")  # noqa: TRY003

    @staticmethod
    def _class_names(num_classes: int, headers: list[CheckpointHeader]) -> list[str]:
        for header in headers:
            names = header.metadata.get("class_names")
            if names:
                return list(names)
        return DEFAULT_CLASS_NAMES[:num_classes]

    @staticmethod
    def _load(data: Path, num_classes: int, target_size, center_crop, cache: dict) -> DatasetLoadResult:
        key = (target_size, center_crop)
        if key not in cache:
            result = load_dataset(data, num_classes=num_classes, target_size=target_size, center_crop=center_crop)
            if result.errors:
                raise DataError(f"{len(result.errors)} pairing error(s) under {data}", errors=result.errors)  # noqa: TRY003
            if not result.samples:
                raise DataError(f"No samples found under {data}")  # noqa: TRY003
            cache[key] = result
        return cache[key]
