"""Data classes for samples, metrics and training history."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core.exceptions import UsageError


@dataclass
class SegmentationSample:
    """One preprocessed CT slice (or phantom) with its integer label mask."""

    image: np.ndarray
    mask: np.ndarray
    identifier: str = ""
    subject_id: str = ""

    def __post_init__(self):
        if self.image.shape != self.mask.shape:
            raise UsageError(  # noqa: TRY003
                f"Image shape {self.image.shape} does not match mask shape {self.mask.shape} ({self.identifier})"
            )
        if not self.subject_id:
            self.subject_id = self.identifier

    @property
    def shape(self) -> tuple[int, ...]:
        return self.image.shape

    def class_counts(self, num_classes: int) -> list[int]:
        return np.bincount(self.mask.ravel(), minlength=num_classes)[:num_classes].tolist()


@dataclass
class MetricsRecord:
    """Per-class Dice/Jaccard macro-averaged over samples."""

    num_classes: int
    dice: dict[int, float] = field(default_factory=dict)
    jaccard: dict[int, float] = field(default_factory=dict)
    pixel_counts: dict[int, int] = field(default_factory=dict)
    num_samples: int = 0

    @property
    def foreground_classes(self) -> list[int]:
        return list(range(1, self.num_classes))

    @property
    def mean_dice(self) -> float:
        classes = self.foreground_classes
        return sum(self.dice[c] for c in classes) / len(classes) if classes else 0.0

    @property
    def mean_jaccard(self) -> float:
        classes = self.foreground_classes
        return sum(self.jaccard[c] for c in classes) / len(classes) if classes else 0.0

    def to_rows(self, method: str, class_names: list[str]) -> list["MetricsRow"]:
        """Two rows (Dice, Jaccard) with one value per foreground class, as in the results table."""
        names = [class_name(class_names, c) for c in self.foreground_classes]
        dice_values = {name: self.dice[c] for name, c in zip(names, self.foreground_classes)}
        jaccard_values = {name: self.jaccard[c] for name, c in zip(names, self.foreground_classes)}
        return [
            MetricsRow(method, "Dice coefficient", dice_values, self.mean_dice),
            MetricsRow(method, "Jaccard index", jaccard_values, self.mean_jaccard),
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_classes": self.num_classes,
            "num_samples": self.num_samples,
            "dice": {str(c): v for c, v in self.dice.items()},
            "jaccard": {str(c): v for c, v in self.jaccard.items()},
            "pixel_counts": {str(c): v for c, v in self.pixel_counts.items()},
            "mean_dice": self.mean_dice,
            "mean_jaccard": self.mean_jaccard,
        }


def class_name(class_names: list[str], class_id: int) -> str:
    return class_names[class_id] if class_id < len(class_names) else f"class_{class_id}"


@dataclass
class MetricsRow:
    method: str
    metric: str
    values: dict[str, float]
    mean: float

    def to_dict(self) -> dict[str, Any]:
        return {"method": self.method, "metric": self.metric, **self.values, "mean": self.mean}


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_dice: float
    learning_rate: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_dice": self.val_dice,
            "lr": self.learning_rate,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EpochRecord":
        return cls(data["epoch"], data["train_loss"], data["val_loss"], data["val_dice"], data["lr"])


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_dice: float = float("-inf")
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.records)

    @property
    def learning_rates(self) -> list[float]:
        return [r.learning_rate for r in self.records]

    def summary(self) -> dict[str, Any]:
        return {
            "epochs": len(self.records),
            "best_epoch": self.best_epoch,
            "best_val_dice": self.best_val_dice,
            "stop_reason": self.stop_reason,
        }
