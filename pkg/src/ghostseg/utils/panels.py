"""Five-panel report figures.

Columns, left to right: original slice, ground truth, prediction, mask
difference (false negatives magenta, false positives cyan) and the prediction
overlaid on the slice with translucent class colours.
"""

from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from ..core.exceptions import FileOperationError, UsageError  # noqa: E402

PANEL_TITLES = ("Original", "Ground truth", "Prediction", "Difference", "Overlay")

CLASS_COLORS = {
    0: (0.0, 0.0, 0.0),
    1: (1.0, 0.85, 0.1),
    2: (0.2, 0.6, 1.0),
    3: (0.85, 0.2, 0.2),
}
FALSE_NEGATIVE_COLOR = (1.0, 0.0, 1.0)
FALSE_POSITIVE_COLOR = (0.0, 1.0, 1.0)
OVERLAY_ALPHA = 0.4


def class_color(class_id: int) -> tuple[float, float, float]:
    if class_id in CLASS_COLORS:
        return CLASS_COLORS[class_id]
    r, g, b, _ = matplotlib.colormaps["tab10"](class_id % 10)
    return (r, g, b)


def colorize(mask: np.ndarray, num_classes: int) -> np.ndarray:
    rgb = np.zeros((*mask.shape, 3), dtype=np.float32)
    for class_id in range(1, num_classes):
        rgb[mask == class_id] = class_color(class_id)
    return rgb


def difference_panel(gt: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Missed foreground in magenta, spurious foreground in cyan, all else black."""
    rgb = np.zeros((*gt.shape, 3), dtype=np.float32)
    false_negative = (gt > 0) & (pred != gt)
    false_positive = (pred > 0) & (gt == 0)
    rgb[false_negative] = FALSE_NEGATIVE_COLOR
    rgb[false_positive] = FALSE_POSITIVE_COLOR
    return rgb


def overlay_panel(image: np.ndarray, pred: np.ndarray, num_classes: int) -> np.ndarray:
    gray = np.repeat(np.clip(image, 0.0, 1.0)[..., None], 3, axis=-1).astype(np.float32)
    colors = colorize(pred, num_classes)
    foreground = (pred > 0)[..., None]
    blended = (1.0 - OVERLAY_ALPHA) * gray + OVERLAY_ALPHA * colors
    return np.where(foreground, blended, gray).astype(np.float32)


def render_panels(image: np.ndarray, gt: np.ndarray, pred: np.ndarray, num_classes: int) -> list[np.ndarray]:
    """RGB arrays in ``PANEL_TITLES`` order."""
    if not (image.shape == gt.shape == pred.shape):
        raise UsageError(  # noqa: TRY003
            f"Panel inputs differ in shape: image {image.shape}, gt {gt.shape}, prediction {pred.shape}"
        )
    original = np.repeat(np.clip(image, 0.0, 1.0)[..., None], 3, axis=-1).astype(np.float32)
    return [
        original,
        colorize(gt, num_classes),
        colorize(pred, num_classes),
        difference_panel(gt, pred),
        overlay_panel(image, pred, num_classes),
    ]


def save_panels(
    panels: Sequence[np.ndarray], path: str | Path, class_names: Sequence[str], title: str | None = None
) -> Path:
    path = Path(path)
    fig, axes = plt.subplots(1, len(panels), figsize=(3 * len(panels), 3.4))
    try:
        for ax, panel, panel_title in zip(np.atleast_1d(axes), panels, PANEL_TITLES):
            ax.imshow(panel, interpolation="nearest")
            ax.set_title(panel_title, fontsize=9)
            ax.axis("off")

        legend = [Patch(color=class_color(c), label=name) for c, name in enumerate(class_names) if c > 0]
        legend += [
            Patch(color=FALSE_NEGATIVE_COLOR, label="false negative"),
            Patch(color=FALSE_POSITIVE_COLOR, label="false positive"),
        ]
        fig.legend(handles=legend, loc="lower center", ncol=len(legend), fontsize=7, frameon=False)
        if title:
            fig.suptitle(title, fontsize=10)
        fig.tight_layout(rect=(0, 0.08, 1, 0.95))
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=100)
    except OSError as e:
        raise FileOperationError(f"Cannot write panel figure {path}: {e}") from e  # noqa: TRY003
    finally:
        plt.close(fig)
    return path
