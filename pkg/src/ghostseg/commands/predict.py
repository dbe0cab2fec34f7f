from pathlib import Path

import numpy as np
from rich.console import Console
from skimage import io as skio

from ..core.config import RESOLVED_CONFIG_FILE
from ..core.exceptions import DataError, FileOperationError
from ..nn.checkpoint import load_checkpoint
from ..services.dataset import preprocess_image, read_image
from ..services.inference import predict_masks
from ..utils.common import FileOperations, ProgressFactory
from ..utils.logger import get_logger


class PredictCommand:
    def __init__(self, console: Console):
        self.console = console
        self.logger = get_logger(console)

    def execute(self, checkpoint: Path, input_dir: Path, out: Path, extension: str = ".png") -> list[Path]:
        net, header = load_checkpoint(checkpoint)
        target_size = header.metadata.get("target_size")
        center_crop = header.metadata.get("center_crop")

        paths = sorted(p for p in input_dir.glob(f"*{extension}") if p.is_file())
        if not paths:
            raise DataError(f"No {extension} images found in {input_dir}")  # noqa: TRY003

        stems, images = [], []
        for path in paths:
            try:
                raw = read_image(path)
            except (OSError, ValueError) as e:
                self.logger.warning(f"Skipping unreadable image {path}: {e}")
                continue
            stems.append(path.stem)
            images.append(preprocess_image(raw, target_size, center_crop, str(path)))

        out = FileOperations.ensure_directory(out)
        FileOperations.safe_write_json(
            out / RESOLVED_CONFIG_FILE,
            {"checkpoint": str(checkpoint), "input": str(input_dir), **header.to_dict()},
        )

        written = []
        with ProgressFactory.create_processing_progress(self.console, "Predicting") as progress:
            task = progress.add_task("predict", total=len(images))
            for stem, mask in zip(stems, predict_masks(net, images)):
                target = out / f"{stem}{extension}"
                try:
                    skio.imsave(target, mask.astype(np.uint8), check_contrast=False)
                except OSError as e:
                    raise FileOperationError(f"Cannot write {target}: {e}") from e  # noqa: TRY003
                written.append(target)
                progress.advance(task)

        self.console.print(f"[green]✓[/green] Wrote {len(written)} mask(s) to [cyan]{out}[/cyan]")
        return written
