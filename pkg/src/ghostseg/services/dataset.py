"""Slice/mask ingestion, preprocessing, augmentation and subject-level splitting.

Directory layout::

    <root>/images/<stem>.png   8- or 16-bit grayscale slice
    <root>/masks/<stem>.png    single-channel integer class ids

Stems of the form ``<subject>__<slice>`` group slices by subject so a subject
never straddles the train/validation/test split.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from skimage import io as skio
from skimage.color import rgb2gray
from skimage.transform import SimilarityTransform, resize, warp
from torch.utils.data import Dataset

from ..core.exceptions import ConfigurationError, DataError, FileOperationError, UsageError
from ..models import SegmentationSample

logger = logging.getLogger("ghostseg.data")


@dataclass(frozen=True)
class DatasetLayout:
    image_dir: str = "images"
    mask_dir: str = "masks"
    extension: str = ".png"
    subject_separator: str = "__"

    def subject_of(self, stem: str) -> str:
        if self.subject_separator and self.subject_separator in stem:
            return stem.split(self.subject_separator, 1)[0]
        return stem


@dataclass
class DatasetLoadResult:
    samples: list[SegmentationSample] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class AugmentPolicy:
    """Ranges for the random geometric and intensity transforms."""

    rotation_degrees: float = 15.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    hflip_probability: float = 0.5
    intensity_jitter: float = 0.1

    def __post_init__(self):
        if self.rotation_degrees < 0:
            raise ConfigurationError(f"rotation_degrees must be >= 0, got {self.rotation_degrees}")  # noqa: TRY003
        low, high = self.scale_range
        if low <= 0 or high < low:
            raise ConfigurationError(f"scale_range must satisfy 0 < low <= high, got {self.scale_range}")  # noqa: TRY003
        if not 0.0 <= self.hflip_probability <= 1.0:
            raise ConfigurationError(f"hflip_probability must be in [0, 1], got {self.hflip_probability}")  # noqa: TRY003
        if not 0.0 <= self.intensity_jitter < 1.0:
            raise ConfigurationError(f"intensity_jitter must be in [0, 1), got {self.intensity_jitter}")  # noqa: TRY003

    @classmethod
    def identity(cls) -> "AugmentPolicy":
        return cls(rotation_degrees=0.0, scale_range=(1.0, 1.0), hflip_probability=0.0, intensity_jitter=0.0)


@dataclass(frozen=True)
class TransformDraw:
    """One concrete draw from an AugmentPolicy."""

    angle: float = 0.0
    scale: float = 1.0
    hflip: bool = False
    intensity_scale: float = 1.0


def pair_files(
    image_dir: Path, mask_dir: Path, extension: str = ".png"
) -> tuple[list[tuple[str, Path, Path]], list[str]]:
    """Match image and mask files by stem; unmatched files become error lines."""
    images = {p.stem: p for p in sorted(image_dir.glob(f"*{extension}")) if p.is_file()}
    masks = {p.stem: p for p in sorted(mask_dir.glob(f"*{extension}")) if p.is_file()}

    errors = [f"Missing mask for image {images[stem]}" for stem in sorted(set(images) - set(masks))]
    errors += [f"Missing image for mask {masks[stem]}" for stem in sorted(set(masks) - set(images))]
    pairs = [(stem, images[stem], masks[stem]) for stem in sorted(set(images) & set(masks))]
    return pairs, errors


def read_image(path: Path) -> np.ndarray:
    image = skio.imread(path)
    if image.ndim == 3:
        image = rgb2gray(image[..., :3])
    return image


def read_mask(path: Path) -> np.ndarray:
    mask = skio.imread(path)
    if mask.ndim == 3:
        mask = mask[..., 0]
    return mask.astype(np.int64)


def load_dataset(
    root: str | Path,
    layout: DatasetLayout | None = None,
    num_classes: int = 4,
    target_size: int | tuple[int, int] | None = None,
    center_crop: float | None = None,
) -> DatasetLoadResult:
    """Load and preprocess every paired slice under ``root``.

    Pairing problems are returned as itemised errors; unreadable files are
    skipped and counted. A mask with a label outside ``0..num_classes-1``
    raises DataError naming the file.
    """
    layout = layout or DatasetLayout()
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"Data directory not found: {root}")  # noqa: TRY003

    image_dir = root / layout.image_dir
    mask_dir = root / layout.mask_dir
    if not image_dir.exists() and not mask_dir.exists():
        return DatasetLoadResult()
    for directory, kind in ((image_dir, "Image"), (mask_dir, "Mask")):
        if not directory.is_dir():
            raise DataError(f"{kind} directory not found: {directory}", errors=[str(directory)])  # noqa: TRY003

    pairs, errors = pair_files(image_dir, mask_dir, layout.extension)
    result = DatasetLoadResult(errors=errors)

    for stem, image_path, mask_path in pairs:
        try:
            raw_image = read_image(image_path)
            raw_mask = read_mask(mask_path)
        except (OSError, ValueError) as e:
            result.skipped += 1
            logger.warning("Skipping unreadable pair %s: %s", stem, e)
            continue

        if raw_mask.size and (raw_mask.min() < 0 or raw_mask.max() >= num_classes):
            raise DataError(  # noqa: TRY003
                f"Mask {mask_path} has label {int(raw_mask.max())} outside 0..{num_classes - 1}",
                errors=[str(mask_path)],
                error_code="LABEL_RANGE",
            )

        sample = preprocess(raw_image, raw_mask, target_size, center_crop=center_crop, identifier=str(image_path))
        sample.subject_id = layout.subject_of(stem)
        result.samples.append(sample)

    if result.skipped:
        logger.warning("Skipped %d unreadable file pair(s) under %s", result.skipped, root)
    logger.debug("Loaded %d samples from %s (%d pairing errors)", len(result.samples), root, len(result.errors))
    return result


def _as_size(target_size: int | tuple[int, int] | Sequence[int]) -> tuple[int, int]:
    if isinstance(target_size, int):
        return target_size, target_size
    height, width = target_size
    return int(height), int(width)


def _center_crop(array: np.ndarray, fraction: float) -> np.ndarray:
    if not 0.0 < fraction <= 1.0:
        raise UsageError(f"center_crop must be in (0, 1], got {fraction}")  # noqa: TRY003
    height, width = array.shape[:2]
    crop_h = max(1, round(height * fraction))
    crop_w = max(1, round(width * fraction))
    top = (height - crop_h) // 2
    left = (width - crop_w) // 2
    return array[top : top + crop_h, left : left + crop_w]


def normalize_intensity(image: np.ndarray, identifier: str = "") -> np.ndarray:
    """Per-slice min-max scaling to [0, 1]; a constant slice becomes all zeros."""
    image = np.asarray(image, dtype=np.float64)
    low, high = float(image.min()), float(image.max())
    if high <= low:
        logger.warning("Constant image %s normalized to zeros", identifier or "<unnamed>")
        return np.zeros(image.shape, dtype=np.float32)
    return ((image - low) / (high - low)).astype(np.float32)


def preprocess_image(
    raw_image: np.ndarray,
    target_size: int | tuple[int, int] | None = None,
    center_crop: float | None = None,
    identifier: str = "",
) -> np.ndarray:
    image = np.asarray(raw_image, dtype=np.float64)
    if center_crop is not None:
        image = _center_crop(image, center_crop)
    if target_size is not None and image.shape != _as_size(target_size):
        image = resize(image, _as_size(target_size), order=1, preserve_range=True, anti_aliasing=False)
    return normalize_intensity(image, identifier)


def preprocess_mask(
    raw_mask: np.ndarray, target_size: int | tuple[int, int] | None = None, center_crop: float | None = None
) -> np.ndarray:
    mask = np.asarray(raw_mask)
    if center_crop is not None:
        mask = _center_crop(mask, center_crop)
    if target_size is not None and mask.shape != _as_size(target_size):
        # nearest neighbour keeps the label set exact
        mask = resize(mask, _as_size(target_size), order=0, preserve_range=True, anti_aliasing=False)
    return np.rint(mask).astype(np.int64)


def preprocess(
    raw_image: np.ndarray,
    raw_mask: np.ndarray,
    target_size: int | tuple[int, int] | None = None,
    center_crop: float | None = None,
    identifier: str = "",
    subject_id: str = "",
) -> SegmentationSample:
    """Optional center crop, bilinear/nearest resize and min-max normalization."""
    if np.shape(raw_image) != np.shape(raw_mask):
        raise UsageError(  # noqa: TRY003
            f"Image shape {np.shape(raw_image)} does not match mask shape {np.shape(raw_mask)} ({identifier})"
        )
    image = preprocess_image(raw_image, target_size, center_crop, identifier)
    mask = preprocess_mask(raw_mask, target_size, center_crop)
    return SegmentationSample(image, mask, identifier, subject_id)


def draw_transform(policy: AugmentPolicy, rng: np.random.Generator) -> TransformDraw:
    angle = rng.uniform(-policy.rotation_degrees, policy.rotation_degrees) if policy.rotation_degrees else 0.0
    low, high = policy.scale_range
    scale = rng.uniform(low, high) if high > low else low
    hflip = bool(rng.random() < policy.hflip_probability)
    jitter = policy.intensity_jitter
    intensity = 1.0 + rng.uniform(-jitter, jitter) if jitter else 1.0
    return TransformDraw(float(angle), float(scale), hflip, float(intensity))


def _similarity(shape: tuple[int, int], angle: float, scale: float) -> SimilarityTransform:
    height, width = shape
    center = np.array([(width - 1) / 2.0, (height - 1) / 2.0])
    return (
        SimilarityTransform(translation=-center)
        + SimilarityTransform(scale=scale, rotation=math.radians(angle))
        + SimilarityTransform(translation=center)
    )


def apply_transform(sample: SegmentationSample, draw: TransformDraw) -> SegmentationSample:
    """Apply one geometric draw to image (bilinear) and mask (nearest), jitter to the image only."""
    image = sample.image.copy()
    mask = sample.mask.copy()

    if draw.hflip:
        image = np.fliplr(image)
        mask = np.fliplr(mask)

    quarter_turns, remainder = divmod(draw.angle, 90.0)
    square = image.shape[0] == image.shape[1]
    if draw.scale == 1.0 and remainder == 0.0 and square:
        # clockwise, matching the warp path on row-major axes
        image = np.rot90(image, -int(quarter_turns) % 4)
        mask = np.rot90(mask, -int(quarter_turns) % 4)
    else:
        inverse = _similarity(image.shape, draw.angle, draw.scale).inverse
        image = warp(image, inverse, order=1, mode="constant", cval=0.0, preserve_range=True)
        mask = warp(mask.astype(np.float64), inverse, order=0, mode="constant", cval=0.0, preserve_range=True)

    image = np.ascontiguousarray(image, dtype=np.float32)
    if draw.intensity_scale != 1.0:
        image = np.clip(image * draw.intensity_scale, 0.0, 1.0).astype(np.float32)
    mask = np.ascontiguousarray(np.rint(mask), dtype=np.int64)
    return SegmentationSample(image, mask, sample.identifier, sample.subject_id)


def augment(sample: SegmentationSample, policy: AugmentPolicy, rng_seed: int) -> SegmentationSample:
    """Random transform drawn from ``policy``; deterministic given ``rng_seed``."""
    rng = np.random.default_rng(rng_seed)
    return apply_transform(sample, draw_transform(policy, rng))


def augmentation_seed(seed: int, index: int, epoch: int) -> int:
    """Per-sample seed independent of worker count or prefetch order."""
    return int(np.random.SeedSequence([seed, index, epoch]).generate_state(1)[0])


def split(
    samples: Sequence[SegmentationSample], ratios: Sequence[float] = (0.7, 0.2, 0.1), seed: int = 0
) -> tuple[list[SegmentationSample], list[SegmentationSample], list[SegmentationSample]]:
    """Subject-level train/val/test partition.

    Validation and test get ``floor(ratio * subjects)`` subjects each; the
    remainder goes to training.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-6):
        raise UsageError(f"Split ratios must be three non-negative values summing to 1, got {tuple(ratios)}")  # noqa: TRY003

    subjects = sorted({s.subject_id for s in samples})
    if len(subjects) < 3:
        raise UsageError(f"Need at least 3 subjects to split, got {len(subjects)}")  # noqa: TRY003

    n = len(subjects)
    n_val = math.floor(ratios[1] * n + 1e-9)
    n_test = math.floor(ratios[2] * n + 1e-9)
    n_train = n - n_val - n_test

    order = np.random.default_rng(seed).permutation(n)
    shuffled = [subjects[i] for i in order]
    assignment = {subject: 0 for subject in shuffled[:n_train]}
    assignment.update({subject: 1 for subject in shuffled[n_train : n_train + n_val]})
    assignment.update({subject: 2 for subject in shuffled[n_train + n_val :]})

    parts: tuple[list, list, list] = ([], [], [])
    for sample in samples:
        parts[assignment[sample.subject_id]].append(sample)
    return parts


def write_sample(sample: SegmentationSample, root: str | Path, stem: str, layout: DatasetLayout | None = None) -> None:
    """Write one sample as 8-bit PNGs in the images/masks layout."""
    layout = layout or DatasetLayout()
    root = Path(root)
    image = np.clip(np.rint(sample.image * 255.0), 0, 255).astype(np.uint8)
    mask = sample.mask.astype(np.uint8)
    try:
        (root / layout.image_dir).mkdir(parents=True, exist_ok=True)
        (root / layout.mask_dir).mkdir(parents=True, exist_ok=True)
        skio.imsave(root / layout.image_dir / f"{stem}{layout.extension}", image, check_contrast=False)
        skio.imsave(root / layout.mask_dir / f"{stem}{layout.extension}", mask, check_contrast=False)
    except OSError as e:
        raise FileOperationError(f"Cannot write sample {stem} under {root}: {e}") from e  # noqa: TRY003


class SegmentationDataset(Dataset):
    """Torch view over samples with per-(seed, index, epoch) augmentation."""

    def __init__(self, samples: Sequence[SegmentationSample], policy: AugmentPolicy | None = None, seed: int = 0):
        self.samples = list(samples)
        self.policy = policy
        self.seed = seed
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor]:
        sample = self.samples[index]
        if self.policy is not None:
            sample = augment(sample, self.policy, augmentation_seed(self.seed, index, self.epoch))
        image = torch.from_numpy(np.ascontiguousarray(sample.image, dtype=np.float32)).unsqueeze(0)
        mask = torch.from_numpy(np.ascontiguousarray(sample.mask, dtype=np.int64))
        return image, mask
