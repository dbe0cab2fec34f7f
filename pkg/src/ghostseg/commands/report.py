from pathlib import Path

from rich.console import Console

from ..core.config import RESOLVED_CONFIG_FILE
from ..core.exceptions import DataError
from ..nn.checkpoint import load_checkpoint
from ..services.dataset import pair_files, preprocess, read_image, read_mask
from ..services.inference import predict_masks
from ..utils.common import FileOperations, ProgressFactory
from ..utils.panels import render_panels, save_panels

DEFAULT_CLASS_NAMES = ["background", "VAT", "SAT", "liver"]


class ReportCommand:
    def __init__(self, console: Console):
        self.console = console

    def execute(
        self, checkpoint: Path, input_dir: Path, gt_dir: Path, outdir: Path, extension: str = ".png"
    ) -> list[Path]:
        """One five-panel figure per paired slice."""
        net, header = load_checkpoint(checkpoint)
        num_classes = header.network.num_classes
        class_names = header.metadata.get("class_names") or DEFAULT_CLASS_NAMES[:num_classes]

        pairs, errors = pair_files(input_dir, gt_dir, extension)
        if errors:
            raise DataError(  # noqa: TRY003
                f"{len(errors)} unmatched file(s) between {input_dir} and {gt_dir}", errors=errors
            )
        if not pairs:
            raise DataError(f"No {extension} pairs found in {input_dir} and {gt_dir}")  # noqa: TRY003

        samples = [
            preprocess(
                read_image(image_path),
                read_mask(mask_path),
                header.metadata.get("target_size"),
                header.metadata.get("center_crop"),
                identifier=stem,
            )
            for stem, image_path, mask_path in pairs
        ]
        predictions = predict_masks(net, [s.image for s in samples])

        outdir = FileOperations.ensure_directory(outdir)
        FileOperations.safe_write_json(
            outdir / RESOLVED_CONFIG_FILE,
            {"checkpoint": str(checkpoint), "input": str(input_dir), "gt": str(gt_dir), **header.to_dict()},
        )

        written = []
        with ProgressFactory.create_processing_progress(self.console, "Rendering panels") as progress:
            task = progress.add_task("report", total=len(samples))
            for sample, prediction in zip(samples, predictions):
                panels = render_panels(sample.image, sample.mask, prediction, num_classes)
                target = outdir / f"{sample.identifier}_panels.png"
                written.append(save_panels(panels, target, class_names, sample.identifier))
                progress.advance(task)

        self.console.print(f"[green]✓[/green] Wrote {len(written)} panel figure(s) to [cyan]{outdir}[/cyan]")
        return written
