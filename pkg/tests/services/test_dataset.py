"""Tests for dataset loading, preprocessing, augmentation and splitting."""

import numpy as np
import pytest
import torch

from ghostseg.core.exceptions import ConfigurationError, DataError, UsageError
from ghostseg.models import SegmentationSample
from ghostseg.services.dataset import (
    AugmentPolicy,
    DatasetLayout,
    SegmentationDataset,
    TransformDraw,
    apply_transform,
    augment,
    augmentation_seed,
    load_dataset,
    normalize_intensity,
    pair_files,
    preprocess,
    split,
    write_sample,
)


def subject_samples(subjects: int, slices: int = 1) -> list[SegmentationSample]:
    samples = []
    for s in range(subjects):
        for k in range(slices):
            image = np.zeros((4, 4), dtype=np.float32)
            mask = np.zeros((4, 4), dtype=np.int64)
            samples.append(SegmentationSample(image, mask, f"s{s:03d}__{k}", f"s{s:03d}"))
    return samples


class TestDatasetLayout:
    def test_subject_from_stem(self):
        layout = DatasetLayout()
        assert layout.subject_of("patient07__slice012") == "patient07"
        assert layout.subject_of("single") == "single"


class TestLoadDataset:
    def test_missing_root(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_dataset(tmp_path / "nowhere")

    def test_empty_directory(self, tmp_path):
        result = load_dataset(tmp_path)
        assert result.samples == []
        assert result.errors == []

    def test_pairs_and_orphan(self, tmp_path, pair_writer):
        pair_writer(tmp_path, ["a__1", "a__2", "b__1", "c__1"])
        (tmp_path / "masks" / "c__1.png").unlink()

        result = load_dataset(tmp_path)
        assert len(result) == 3
        assert len(result.errors) == 1
        assert "Missing mask" in result.errors[0]
        assert "c__1.png" in result.errors[0]
        assert sorted({s.subject_id for s in result.samples}) == ["a", "b"]

    def test_orphan_mask(self, tmp_path, pair_writer):
        pair_writer(tmp_path, ["a", "b"])
        (tmp_path / "images" / "b.png").unlink()
        _, errors = pair_files(tmp_path / "images", tmp_path / "masks")
        assert errors == [f"Missing image for mask {tmp_path / 'masks' / 'b.png'}"]

    def test_label_out_of_range(self, tmp_path, pair_writer):
        pair_writer(tmp_path, ["a"], label=5)
        with pytest.raises(DataError) as exc_info:
            load_dataset(tmp_path, num_classes=4)
        assert exc_info.value.error_code == "LABEL_RANGE"
        assert "a.png" in exc_info.value.message

    def test_missing_mask_directory(self, tmp_path, pair_writer):
        pair_writer(tmp_path, ["a"])
        for path in (tmp_path / "masks").iterdir():
            path.unlink()
        (tmp_path / "masks").rmdir()
        with pytest.raises(DataError) as exc_info:
            load_dataset(tmp_path)
        assert str(tmp_path / "masks") in exc_info.value.message

    def test_round_trip_through_png(self, tmp_path, pair_writer):
        pair_writer(tmp_path, ["x__0"], size=8, label=2)
        sample = load_dataset(tmp_path).samples[0]
        expected = np.linspace(0.0, 1.0, 64, dtype=np.float32).reshape(8, 8)
        assert sample.image.dtype == np.float32
        assert np.allclose(sample.image, expected, atol=3e-3)
        assert set(np.unique(sample.mask)) == {0, 2}

    def test_resize_on_load(self, tmp_path, pair_writer):
        pair_writer(tmp_path, ["a", "b"], size=16)
        result = load_dataset(tmp_path, target_size=8)
        assert all(s.shape == (8, 8) for s in result.samples)


class TestPreprocess:
    def test_constant_image_becomes_zeros(self):
        out = normalize_intensity(np.full((5, 5), 7.0))
        assert out.dtype == np.float32
        assert np.count_nonzero(out) == 0

    def test_min_max_range(self):
        out = normalize_intensity(np.array([[100.0, 200.0], [300.0, 500.0]]))
        assert out.min() == 0.0
        assert out.max() == 1.0

    def test_downsample_keeps_label_subset(self):
        rng = np.random.default_rng(0)
        image = rng.random((512, 512)) * 4000
        mask = np.zeros((512, 512), dtype=np.int64)
        mask[100:300, 50:250] = 1
        mask[350:400, 350:480] = 3

        sample = preprocess(image, mask, target_size=256)
        assert sample.image.shape == sample.mask.shape == (256, 256)
        assert sample.mask.dtype == np.int64
        assert set(np.unique(sample.mask)) <= {0, 1, 3}
        assert 0.0 <= sample.image.min() and sample.image.max() <= 1.0

    def test_center_crop(self):
        image = np.arange(100, dtype=np.float64).reshape(10, 10)
        mask = np.zeros((10, 10), dtype=np.int64)
        sample = preprocess(image, mask, center_crop=0.5)
        assert sample.shape == (5, 5)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            preprocess(np.zeros((4, 4)), np.zeros((5, 5), dtype=np.int64))


class TestAugmentation:
    def test_policy_validation(self):
        with pytest.raises(ConfigurationError):
            AugmentPolicy(scale_range=(1.2, 0.8))
        with pytest.raises(ConfigurationError):
            AugmentPolicy(hflip_probability=1.5)

    def test_identity_policy(self, factory):
        sample = factory.create_sample()
        out = augment(sample, AugmentPolicy.identity(), rng_seed=5)
        assert np.array_equal(out.image, sample.image)
        assert np.array_equal(out.mask, sample.mask)

    def test_double_flip_restores(self, factory):
        sample = factory.create_sample()
        draw = TransformDraw(hflip=True)
        once = apply_transform(sample, draw)
        assert np.array_equal(once.mask, np.fliplr(sample.mask))
        twice = apply_transform(once, draw)
        assert np.array_equal(twice.image, sample.image)
        assert np.array_equal(twice.mask, sample.mask)

    def test_quarter_turn_keeps_class_counts(self, factory):
        sample = factory.create_sample()
        out = apply_transform(sample, TransformDraw(angle=90.0))
        assert np.array_equal(out.mask, np.rot90(sample.mask, -1))
        assert out.class_counts(4) == sample.class_counts(4)

    def test_quarter_turn_matches_interpolated_rotation(self, factory):
        mask = np.zeros((9, 9), dtype=np.int64)
        mask[1:3, 2:7] = 1
        image = np.random.default_rng(1).random((9, 9)).astype(np.float32)
        sample = SegmentationSample(image, mask)

        exact = apply_transform(sample, TransformDraw(angle=90.0))
        interpolated = apply_transform(sample, TransformDraw(angle=89.999))

        assert np.array_equal(exact.mask, interpolated.mask)
        assert np.allclose(exact.image[1:-1, 1:-1], interpolated.image[1:-1, 1:-1], atol=1e-3)
        # the top bar ends up in the right-hand columns
        assert exact.mask[:, 6:8].sum() == 10
        assert exact.mask[:, :5].sum() == 0

    def test_quarter_turn_keeps_non_square_shape(self):
        sample = SegmentationSample(np.ones((8, 16), dtype=np.float32), np.ones((8, 16), dtype=np.int64))
        out = apply_transform(sample, TransformDraw(angle=90.0))
        assert out.image.shape == (8, 16)
        assert out.mask.shape == (8, 16)

    def test_full_turn_is_identity(self, factory):
        sample = factory.create_sample()
        out = apply_transform(sample, TransformDraw(angle=360.0))
        assert np.array_equal(out.mask, sample.mask)

    def test_arbitrary_rotation_keeps_label_set(self, factory):
        sample = SegmentationSample(
            np.random.default_rng(0).random((16, 16)).astype(np.float32), factory.square_mask(16, 4, 4, 8, label=2)
        )
        out = apply_transform(sample, TransformDraw(angle=12.0, scale=1.05, intensity_scale=1.1))
        assert out.image.dtype == np.float32
        assert out.mask.dtype == np.int64
        assert set(np.unique(out.mask)) <= {0, 2}
        assert 0.0 <= out.image.min() and out.image.max() <= 1.0

    def test_deterministic_per_seed(self, factory):
        sample = factory.create_sample()
        policy = AugmentPolicy()
        a = augment(sample, policy, rng_seed=11)
        b = augment(sample, policy, rng_seed=11)
        assert np.array_equal(a.image, b.image)
        assert np.array_equal(a.mask, b.mask)

    def test_seed_depends_on_index_and_epoch(self):
        assert augmentation_seed(0, 1, 2) == augmentation_seed(0, 1, 2)
        assert augmentation_seed(0, 1, 2) != augmentation_seed(0, 2, 1)
        assert augmentation_seed(0, 1, 2) != augmentation_seed(0, 1, 3)


class TestSplit:
    @pytest.mark.parametrize(("subjects", "expected"), [(100, (70, 20, 10)), (10, (7, 2, 1)), (3, (3, 0, 0))])
    def test_sizes(self, subjects, expected):
        parts = split(subject_samples(subjects), (0.7, 0.2, 0.1), seed=0)
        assert tuple(len(p) for p in parts) == expected

    def test_partition_is_complete_and_disjoint(self):
        samples = subject_samples(20, slices=3)
        train, val, test = split(samples, seed=4)
        assert len(train) + len(val) + len(test) == len(samples)
        subject_sets = [{s.subject_id for s in part} for part in (train, val, test)]
        assert not subject_sets[0] & subject_sets[1]
        assert not subject_sets[0] & subject_sets[2]
        assert not subject_sets[1] & subject_sets[2]

    def test_deterministic(self):
        samples = subject_samples(30)
        a = split(samples, seed=1)
        b = split(samples, seed=1)
        assert [[s.identifier for s in part] for part in a] == [[s.identifier for s in part] for part in b]

    def test_too_few_subjects(self):
        with pytest.raises(UsageError, match="at least 3 subjects"):
            split(subject_samples(2, slices=5))

    def test_bad_ratios(self):
        with pytest.raises(UsageError):
            split(subject_samples(10), (0.5, 0.2, 0.2))


class TestSegmentationDataset:
    def test_item_shapes(self, factory):
        dataset = SegmentationDataset([factory.create_sample(size=8)])
        image, mask = dataset[0]
        assert image.shape == (1, 8, 8)
        assert image.dtype == torch.float32
        assert mask.shape == (8, 8)
        assert mask.dtype == torch.int64

    def test_epoch_changes_augmentation(self, factory):
        dataset = SegmentationDataset([factory.create_sample(size=16)], AugmentPolicy(rotation_degrees=30.0), seed=0)
        first, _ = dataset[0]
        again, _ = dataset[0]
        dataset.set_epoch(1)
        later, _ = dataset[0]
        assert torch.equal(first, again)
        assert not torch.equal(first, later)


class TestWriteSample:
    def test_layout(self, tmp_path, factory):
        write_sample(factory.create_sample(size=8), tmp_path, "s__0")
        assert (tmp_path / "images" / "s__0.png").is_file()
        assert (tmp_path / "masks" / "s__0.png").is_file()
