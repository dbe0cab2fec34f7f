"""Batched prediction and evaluation with frozen weights."""

from collections.abc import Sequence

import numpy as np
import torch

from ..models import MetricsRecord, SegmentationSample
from ..nn.network import AttentionGhostUNetPP
from .metrics import evaluate


def _batches(items: Sequence, batch_size: int):
    for start in range(0, len(items), batch_size):
        yield items[start : start + batch_size]


def predict_masks(
    net: AttentionGhostUNetPP, images: Sequence[np.ndarray], batch_size: int = 16
) -> list[np.ndarray]:
    """Arg-max label masks of the fused logits, one per input slice."""
    was_training = net.training
    net.eval()
    masks: list[np.ndarray] = []
    try:
        with torch.no_grad():
            for batch in _batches(list(images), batch_size):
                x = torch.from_numpy(np.stack([np.asarray(image, dtype=np.float32) for image in batch]))
                x = x.unsqueeze(1).to(next(net.parameters()).dtype)
                labels = net(x).logits.argmax(dim=1)
                masks.extend(label.numpy().astype(np.int64) for label in labels)
    finally:
        net.train(was_training)
    return masks


def evaluate_network(
    net: AttentionGhostUNetPP, samples: Sequence[SegmentationSample], batch_size: int = 16
) -> MetricsRecord:
    predictions = predict_masks(net, [s.image for s in samples], batch_size)
    return evaluate(predictions, [s.mask for s in samples], net.spec.num_classes)
