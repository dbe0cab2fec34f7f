"""Training recipe: Dice + cross-entropy loss, Adam with cosine decay, early stopping on validation Dice."""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader

from ..core.exceptions import ConfigurationError, NumericalError, UsageError
from ..models import EpochRecord, SegmentationSample, TrainHistory
from ..nn.checkpoint import save_checkpoint
from ..nn.network import AttentionGhostUNetPP, SegmentationOutput
from ..utils.common import FileOperations
from .dataset import AugmentPolicy, SegmentationDataset
from .inference import predict_masks
from .metrics import evaluate

logger = logging.getLogger("ghostseg.training")

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
DICE_SMOOTH = 1.0

HISTORY_FILE = "history.jsonl"
SUMMARY_FILE = "train_summary.json"
CHECKPOINT_DIR = "checkpoint"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 16
    max_epochs: int = 300
    patience: int = 100
    seed: int = 0
    dice_weight: float = 1.0
    ce_weight: float = 1.0
    deep_supervision_average: bool = True
    min_improvement: float = 1e-5
    num_workers: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")  # noqa: TRY003
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")  # noqa: TRY003
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be >= 1, got {self.max_epochs}")  # noqa: TRY003
        if not 1 <= self.patience <= self.max_epochs:
            raise ConfigurationError(  # noqa: TRY003
                f"patience must be in 1..max_epochs ({self.max_epochs}), got {self.patience}"
            )
        if self.dice_weight < 0 or self.ce_weight < 0:
            raise ConfigurationError("Loss weights must be non-negative")  # noqa: TRY003
        if self.num_workers < 0:
            raise ConfigurationError(f"num_workers must be >= 0, got {self.num_workers}")  # noqa: TRY003

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def cosine_lr(epoch: int, config: TrainConfig) -> float:
    """0.5 * lr0 * (1 + cos(pi * epoch / max_epochs)), epochs counted from 0."""
    if not 0 <= epoch <= config.max_epochs:
        raise UsageError(f"epoch must be in 0..{config.max_epochs}, got {epoch}")  # noqa: TRY003
    return 0.5 * config.learning_rate * (1.0 + math.cos(math.pi * epoch / config.max_epochs))


def _check_target(logits: torch.Tensor, target: torch.Tensor) -> None:
    if logits.dim() != 4:
        raise UsageError(f"Expected (batch, classes, height, width) logits, got {tuple(logits.shape)}")  # noqa: TRY003
    if target.shape != (logits.shape[0], *logits.shape[2:]):
        raise UsageError(f"Target shape {tuple(target.shape)} does not match logits {tuple(logits.shape)}")  # noqa: TRY003
    num_classes = logits.shape[1]
    if target.numel() and (int(target.min()) < 0 or int(target.max()) >= num_classes):
        raise UsageError(  # noqa: TRY003
            f"Target labels must be in 0..{num_classes - 1}, got {int(target.min())}..{int(target.max())}"
        )


def soft_dice_loss(logits: torch.Tensor, target: torch.Tensor, smooth: float = DICE_SMOOTH) -> torch.Tensor:
    """1 - soft Dice of the softmax probabilities, averaged over foreground classes."""
    num_classes = logits.shape[1]
    probs = F.softmax(logits, dim=1)
    onehot = F.one_hot(target, num_classes).permute(0, 3, 1, 2).to(probs.dtype)
    dims = (0, 2, 3)
    intersection = (probs * onehot).sum(dims)
    total = probs.sum(dims) + onehot.sum(dims)
    dice = (2.0 * intersection + smooth) / (total + smooth)
    return 1.0 - dice[1:].mean()


def combined_loss(
    logits: torch.Tensor, target: torch.Tensor, dice_weight: float = 1.0, ce_weight: float = 1.0
) -> torch.Tensor:
    _check_target(logits, target)
    loss = logits.new_zeros(())
    if dice_weight:
        loss = loss + dice_weight * soft_dice_loss(logits, target)
    if ce_weight:
        loss = loss + ce_weight * F.cross_entropy(logits, target)
    return loss


def supervised_loss(output: SegmentationOutput, target: torch.Tensor, config: TrainConfig) -> torch.Tensor:
    """Mean of the per-head losses; the fused logits are only used when averaging is off."""
    if config.deep_supervision_average:
        losses = [combined_loss(head, target, config.dice_weight, config.ce_weight) for head in output.heads]
        return torch.stack(losses).mean()
    return combined_loss(output.logits, target, config.dice_weight, config.ce_weight)


class EarlyStopping:
    """Stop after ``patience`` consecutive epochs without a val-Dice gain of at least ``min_improvement``."""

    def __init__(self, patience: int, min_improvement: float = 1e-5):
        self.patience = patience
        self.min_improvement = min_improvement
        self.best_score = float("-inf")
        self.best_epoch = 0
        self.epochs_without_improvement = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record ``score`` for ``epoch``; True when it is a new best."""
        if score >= self.best_score + self.min_improvement:
            self.best_score = score
            self.best_epoch = epoch
            self.epochs_without_improvement = 0
            return True
        self.epochs_without_improvement += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.epochs_without_improvement >= self.patience


@dataclass
class TrainResult:
    history: TrainHistory
    best_state: dict[str, torch.Tensor] = field(default_factory=dict)
    checkpoint_dir: Path | None = None


def _loader(samples: Sequence[SegmentationSample], policy: AugmentPolicy | None, config: TrainConfig, shuffle: bool):
    dataset = SegmentationDataset(samples, policy, config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    loader = DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=shuffle,
        num_workers=config.num_workers,
        generator=generator,
    )
    return dataset, loader


def validation_loss(
    net: AttentionGhostUNetPP, samples: Sequence[SegmentationSample], config: TrainConfig
) -> float:
    _, loader = _loader(samples, None, config, shuffle=False)
    was_training = net.training
    net.eval()
    total, count = 0.0, 0
    try:
        with torch.no_grad():
            for images, masks in loader:
                loss = supervised_loss(net(images), masks, config)
                total += loss.item() * images.shape[0]
                count += images.shape[0]
    finally:
        net.train(was_training)
    return total / count


def validation_dice(net: AttentionGhostUNetPP, samples: Sequence[SegmentationSample], batch_size: int) -> float:
    predictions = predict_masks(net, [s.image for s in samples], batch_size)
    return evaluate(predictions, [s.mask for s in samples], net.spec.num_classes).mean_dice


def _snapshot(net: AttentionGhostUNetPP) -> dict[str, torch.Tensor]:
    return {name: tensor.detach().clone() for name, tensor in net.state_dict().items()}


class Trainer:
    def __init__(
        self,
        net: AttentionGhostUNetPP,
        config: TrainConfig,
        policy: AugmentPolicy | None = None,
        on_epoch: Callable[[EpochRecord], None] | None = None,
    ):
        self.net = net
        self.config = config
        self.policy = policy
        self.on_epoch = on_epoch

    def fit(
        self,
        train_set: Sequence[SegmentationSample],
        val_set: Sequence[SegmentationSample],
        out_dir: str | Path | None = None,
        metadata: dict[str, Any] | None = None,
    ) -> TrainResult:
        if not train_set:
            raise UsageError("Training set is empty")  # noqa: TRY003
        if not val_set:
            raise UsageError("Validation set is empty")  # noqa: TRY003

        config = self.config
        torch.manual_seed(config.seed)
        if config.deterministic:
            torch.use_deterministic_algorithms(True, warn_only=True)

        out_dir = Path(out_dir) if out_dir is not None else None
        checkpoint_dir = out_dir / CHECKPOINT_DIR if out_dir is not None else None

        dataset, loader = _loader(train_set, self.policy, config, shuffle=True)
        optimizer = torch.optim.Adam(
            self.net.parameters(), lr=config.learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS
        )
        stopper = EarlyStopping(config.patience, config.min_improvement)
        history = TrainHistory()
        best_state = _snapshot(self.net)

        for epoch in range(1, config.max_epochs + 1):
            lr = cosine_lr(epoch - 1, config)
            for group in optimizer.param_groups:
                group["lr"] = lr

            dataset.set_epoch(epoch)
            train_loss = self._train_epoch(loader, optimizer, epoch, lr)
            val_loss = validation_loss(self.net, val_set, config)
            val_dice = validation_dice(self.net, val_set, config.batch_size)

            record = EpochRecord(epoch, train_loss, val_loss, val_dice, lr)
            history.records.append(record)
            logger.info(
                "epoch %d train_loss=%.5f val_loss=%.5f val_dice=%.5f lr=%.3g",
                epoch,
                train_loss,
                val_loss,
                val_dice,
                lr,
            )

            if stopper.update(epoch, val_dice):
                best_state = _snapshot(self.net)
                if checkpoint_dir is not None:
                    save_checkpoint(
                        self.net,
                        checkpoint_dir,
                        config.seed,
                        {**(metadata or {}), "epoch": epoch, "val_dice": val_dice},
                    )

            if self.on_epoch is not None:
                self.on_epoch(record)

            if stopper.should_stop:
                history.stop_reason = "early_stopping"
                break
        else:
            history.stop_reason = "max_epochs"

        history.best_epoch = stopper.best_epoch
        history.best_val_dice = stopper.best_score
        self.net.load_state_dict(best_state)

        if out_dir is not None:
            FileOperations.write_jsonl(out_dir / HISTORY_FILE, [r.to_dict() for r in history.records])
            FileOperations.safe_write_json(out_dir / SUMMARY_FILE, history.summary())

        return TrainResult(history, best_state, checkpoint_dir)

    def _train_epoch(self, loader: DataLoader, optimizer: torch.optim.Optimizer, epoch: int, lr: float) -> float:
        self.net.train()
        total, count = 0.0, 0
        for batch_index, (images, masks) in enumerate(loader):
            optimizer.zero_grad()
            loss = supervised_loss(self.net(images), masks, self.config)
            if not torch.isfinite(loss):
                raise NumericalError(  # noqa: TRY003
                    f"Non-finite loss at epoch {epoch}, batch {batch_index} (lr={lr:.3g})",
                    diagnostics={"epoch": epoch, "batch": batch_index, "lr": lr, "loss": loss.item()},
                )
            loss.backward()
            optimizer.step()
            total += loss.item() * images.shape[0]
            count += images.shape[0]
        return total / count


def train(
    net: AttentionGhostUNetPP,
    train_set: Sequence[SegmentationSample],
    val_set: Sequence[SegmentationSample],
    config: TrainConfig,
    out_dir: str | Path | None = None,
    policy: AugmentPolicy | None = None,
    metadata: dict[str, Any] | None = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainResult:
    """Fit ``net`` in place and leave it holding the best-validation weights."""
    return Trainer(net, config, policy, on_epoch).fit(train_set, val_set, out_dir, metadata)
