"""Shared test fixtures and utilities for GhostSeg tests."""

import json
from pathlib import Path
from unittest.mock import MagicMock

import numpy as np
import pytest
import torch
from rich.console import Console

from ghostseg.models import SegmentationSample
from ghostseg.nn.network import NetworkSpec, build_network
from ghostseg.services.dataset import write_sample
from ghostseg.services.phantom import PhantomSpec, generate_phantoms


@pytest.fixture
def mock_console():
    """Create a mock console for testing."""
    return MagicMock(spec=Console)


@pytest.fixture
def tiny_spec():
    """Two-level network small enough for gradient checks."""
    return NetworkSpec(depth=2, base_channels=4, num_classes=3, channel_reduction=2)


@pytest.fixture
def tiny_net(tiny_spec):
    return build_network(tiny_spec, seed=0)


@pytest.fixture
def phantom_samples():
    """Twelve 32x32 four-class phantoms, one subject each."""
    return generate_phantoms(PhantomSpec(size=32), 12)


@pytest.fixture
def phantom_dir(tmp_path, phantom_samples):
    """Phantoms written to the images/masks layout."""
    root = tmp_path / "phantoms"
    for sample in phantom_samples:
        write_sample(sample, root, sample.identifier)
    return root


@pytest.fixture
def tiny_config_file(tmp_path):
    """Run configuration for a seconds-long phantom training run."""
    config = {
        "network": {"depth": 2, "base_channels": 4, "num_classes": 4, "channel_reduction": 2},
        "training": {"learning_rate": 0.01, "batch_size": 4, "max_epochs": 2, "patience": 2, "seed": 0},
        "data": {"source": "phantom", "target_size": 32, "num_classes": 4, "phantom_count": 10},
        "augmentation": {"rotation_degrees": 10.0},
        "phantom": {"size": 32},
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(config))
    return path


class DataFactory:
    """Factory for creating test data."""

    @staticmethod
    def square_mask(size: int = 8, top: int = 2, left: int = 2, side: int = 2, label: int = 1) -> np.ndarray:
        mask = np.zeros((size, size), dtype=np.int64)
        mask[top : top + side, left : left + side] = label
        return mask

    @staticmethod
    def create_sample(size: int = 16, num_classes: int = 4, seed: int = 0, subject: str = "") -> SegmentationSample:
        rng = np.random.default_rng(seed)
        image = rng.random((size, size)).astype(np.float32)
        mask = rng.integers(0, num_classes, size=(size, size)).astype(np.int64)
        return SegmentationSample(image, mask, identifier=f"sample-{seed}", subject_id=subject)

    @staticmethod
    def random_batch(spec: NetworkSpec, batch: int = 2, size: int = 16, seed: int = 0) -> torch.Tensor:
        generator = torch.Generator().manual_seed(seed)
        return torch.randn(batch, spec.in_channels, size, size, generator=generator)

    @staticmethod
    def offset_normalization(module: torch.nn.Module, seed: int = 0) -> torch.nn.Module:
        """Move every BatchNorm scale and shift off its 1/0 start so zero inputs stay clear of ReLU kinks."""
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for m in module.modules():
                if isinstance(m, torch.nn.BatchNorm2d):
                    m.weight.uniform_(0.8, 1.2, generator=generator)
                    m.bias.uniform_(0.05, 0.15, generator=generator)
        return module


def write_pairs(root: Path, stems: list[str], size: int = 8, label: int = 1) -> None:
    """Write matching image/mask PNGs for ``stems``."""
    for stem in stems:
        image = np.linspace(0.0, 1.0, size * size, dtype=np.float32).reshape(size, size)
        mask = DataFactory.square_mask(size, label=label)
        write_sample(SegmentationSample(image, mask, stem), root, stem)


@pytest.fixture
def factory():
    return DataFactory


@pytest.fixture
def pair_writer():
    return write_pairs
