"""Synthetic abdominal phantoms with known masks.

Layout per slice: a deformed body ellipse whose outer band is subcutaneous fat
(label 2), an inner cavity holding visceral fat blobs (label 1) and, in liver
mode, an organ ellipse (label 3). Everything else is background (label 0).
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
from scipy import ndimage

from ..core.exceptions import ConfigurationError
from ..models import SegmentationSample
from .dataset import DatasetLayout, write_sample

logger = logging.getLogger("ghostseg.data")

BACKGROUND, VAT, SAT, ORGAN = 0, 1, 2, 3

INTENSITY = {
    "tissue": 0.55,
    "sat": 0.25,
    "vat": 0.30,
    "organ": 0.75,
}


@dataclass(frozen=True)
class PhantomSpec:
    size: int = 64
    include_organ: bool = True
    noise: float = 0.03
    deformation: float = 0.06
    seed: int = 0

    def __post_init__(self):
        if self.size < 16:
            raise ConfigurationError(f"Phantom size must be >= 16, got {self.size}")  # noqa: TRY003
        if self.noise < 0:
            raise ConfigurationError(f"Phantom noise must be >= 0, got {self.noise}")  # noqa: TRY003
        if not 0.0 <= self.deformation <= 0.15:
            raise ConfigurationError(f"Phantom deformation must be in [0, 0.15], got {self.deformation}")  # noqa: TRY003

    @property
    def num_classes(self) -> int:
        return 4 if self.include_organ else 3

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class PhantomGeometry:
    body: np.ndarray
    inner: np.ndarray
    vat: np.ndarray
    organ: np.ndarray

    @property
    def sat(self) -> np.ndarray:
        return self.body & ~self.inner

    def mask(self, include_organ: bool = True) -> np.ndarray:
        mask = np.zeros(self.body.shape, dtype=np.int64)
        mask[self.sat] = SAT
        mask[self.vat] = VAT
        if include_organ:
            mask[self.organ] = ORGAN
        return mask


def _draw_geometry(spec: PhantomSpec, rng: np.random.Generator) -> PhantomGeometry:
    n = spec.size
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)

    cx = (n - 1) / 2.0 + rng.uniform(-0.04, 0.04) * n
    cy = (n - 1) / 2.0 + rng.uniform(-0.04, 0.04) * n
    ax = rng.uniform(0.34, 0.40) * n
    ay = rng.uniform(0.28, 0.34) * n

    theta = np.arctan2(yy - cy, xx - cx)
    radius = np.hypot((xx - cx) / ax, (yy - cy) / ay)

    # low-order harmonics of the outline give each body its own shape
    boundary = np.ones_like(theta)
    for k in range(2, 5):
        amplitude = spec.deformation * rng.uniform(-1.0, 1.0) / (k - 1)
        boundary += amplitude * np.cos(k * theta + rng.uniform(0.0, 2 * np.pi))

    thickness = 0.2 * rng.uniform(0.85, 1.15)
    body = radius <= boundary
    inner = radius <= boundary * (1.0 - thickness)
    cavity = ndimage.binary_erosion(inner, iterations=2)

    ocx = cx - rng.uniform(0.08, 0.14) * n
    ocy = cy - rng.uniform(0.0, 0.08) * n
    orx = rng.uniform(0.10, 0.14) * n
    ory = rng.uniform(0.08, 0.12) * n
    organ = (np.hypot((xx - ocx) / orx, (yy - ocy) / ory) <= 1.0) & cavity
    if not spec.include_organ:
        organ = np.zeros_like(organ)

    field = ndimage.gaussian_filter(rng.standard_normal((n, n)), sigma=n / 16.0)
    region = cavity & ~organ
    threshold = np.quantile(field[region], 0.55) if region.any() else np.inf
    vat = region & (field > threshold)

    return PhantomGeometry(body=body, inner=inner, vat=vat, organ=organ)


def phantom_geometry(spec: PhantomSpec) -> PhantomGeometry:
    """The region layout ``generate_phantom`` uses for ``spec``."""
    return _draw_geometry(spec, np.random.default_rng(spec.seed))


def generate_phantom(spec: PhantomSpec) -> SegmentationSample:
    rng = np.random.default_rng(spec.seed)
    geometry = _draw_geometry(spec, rng)

    image = np.zeros((spec.size, spec.size), dtype=np.float64)
    image[geometry.inner] = INTENSITY["tissue"]
    image[geometry.sat] = INTENSITY["sat"]
    image[geometry.vat] = INTENSITY["vat"]
    if spec.include_organ:
        image[geometry.organ] = INTENSITY["organ"]

    image = ndimage.gaussian_filter(image, sigma=0.6)
    image += spec.noise * rng.standard_normal(image.shape)
    image = np.clip(image, 0.0, 1.0).astype(np.float32)

    return SegmentationSample(
        image, geometry.mask(spec.include_organ), identifier=f"phantom-{spec.seed}", subject_id=f"phantom-{spec.seed}"
    )


def sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def generate_phantoms(spec: PhantomSpec, count: int) -> list[SegmentationSample]:
    """``count`` phantoms, sample ``i`` seeded from (spec.seed, i)."""
    samples = []
    for index in range(count):
        sample = generate_phantom(_with_seed(spec, sample_seed(spec.seed, index)))
        sample.identifier = sample.subject_id = phantom_stem(index)
        samples.append(sample)
    return samples


def phantom_stem(index: int) -> str:
    return f"phantom-{index:04d}"


def _with_seed(spec: PhantomSpec, seed: int) -> PhantomSpec:
    return PhantomSpec(spec.size, spec.include_organ, spec.noise, spec.deformation, seed)


def materialize_phantoms(
    spec: PhantomSpec, count: int, root: str | Path, layout: DatasetLayout | None = None
) -> list[str]:
    """Write ``count`` phantoms under ``root`` in the standard images/masks layout."""
    stems = []
    for sample in generate_phantoms(spec, count):
        write_sample(sample, root, sample.identifier, layout)
        stems.append(sample.identifier)
    logger.debug("Wrote %d phantoms to %s", count, root)
    return stems
