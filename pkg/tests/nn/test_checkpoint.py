"""Tests for checkpoint save/load."""

import json

import numpy as np
import pytest
import torch

from ghostseg.core.exceptions import FileOperationError
from ghostseg.nn.checkpoint import (
    HEADER_FILE,
    MANIFEST_FILE,
    WEIGHTS_FILE,
    ManifestEntry,
    load_checkpoint,
    load_state,
    read_header,
    read_manifest,
    save_checkpoint,
)
from ghostseg.nn.network import NetworkSpec, build_network


@pytest.fixture
def saved(tmp_path, tiny_net):
    directory = save_checkpoint(tiny_net, tmp_path / "ckpt", seed=7, metadata={"target_size": 16})
    return directory, tiny_net


class TestManifestEntry:
    def test_line_format(self):
        entry = ManifestEntry("heads.x0_1.weight", (3, 4, 1, 1), 96, 48)
        assert entry.to_line() == "heads.x0_1.weight\tdtype=float32\tshape=3x4x1x1\toffset=96\tlength=48"
        assert ManifestEntry.from_line(entry.to_line()) == entry

    def test_scalar_shape(self):
        entry = ManifestEntry("bn.num_batches_tracked", (), 0, 4)
        assert "shape=scalar" in entry.to_line()
        assert ManifestEntry.from_line(entry.to_line()).shape == ()

    def test_malformed_line(self):
        with pytest.raises(FileOperationError):
            ManifestEntry.from_line("only\ttwo")


class TestSaveLoad:
    def test_writes_three_files(self, saved):
        directory, _ = saved
        assert {p.name for p in directory.iterdir()} == {MANIFEST_FILE, WEIGHTS_FILE, HEADER_FILE}

    def test_manifest_offsets_cover_blob(self, saved):
        directory, net = saved
        entries = read_manifest(directory)
        assert [e.path for e in entries] == list(net.state_dict())
        offset = 0
        for entry in entries:
            assert entry.offset == offset
            assert entry.length == 4 * int(np.prod(entry.shape, dtype=np.int64))
            offset += entry.length
        assert (directory / WEIGHTS_FILE).stat().st_size == offset

    def test_weights_are_little_endian_float32(self, saved):
        directory, net = saved
        first = read_manifest(directory)[0]
        raw = (directory / WEIGHTS_FILE).read_bytes()[: first.length]
        expected = net.state_dict()[first.path].numpy().astype("<f4").tobytes()
        assert raw == expected

    def test_header(self, saved):
        directory, net = saved
        data = json.loads((directory / HEADER_FILE).read_text())
        assert data["seed"] == 7
        assert data["metadata"] == {"target_size": 16}
        header = read_header(directory)
        assert header.network == net.spec
        assert header.seed == 7

    def test_round_trip_is_bit_identical(self, saved):
        directory, net = saved
        loaded, _ = load_checkpoint(directory)
        for name, tensor in net.state_dict().items():
            assert torch.equal(loaded.state_dict()[name], tensor), name

        x = torch.randn(2, 1, 16, 16)
        assert torch.equal(net.eval()(x).logits, loaded.eval()(x).logits)

    def test_round_trip_after_training_step(self, tmp_path, tiny_spec):
        net = build_network(tiny_spec, seed=1)
        optimizer = torch.optim.Adam(net.parameters(), lr=1e-2)
        loss = net(torch.randn(2, 1, 8, 8)).logits.pow(2).mean()
        loss.backward()
        optimizer.step()

        directory = save_checkpoint(net, tmp_path / "ckpt", seed=1)
        state = load_state(directory)
        for name, tensor in net.state_dict().items():
            assert torch.equal(state[name].to(tensor.dtype), tensor), name


class TestLoadErrors:
    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileOperationError):
            load_checkpoint(tmp_path / "missing")

    def test_truncated_weights(self, saved):
        directory, _ = saved
        blob = directory / WEIGHTS_FILE
        blob.write_bytes(blob.read_bytes()[:-8])
        with pytest.raises(FileOperationError, match="past the end"):
            load_state(directory)

    def test_length_disagrees_with_shape(self, saved):
        directory, _ = saved
        manifest = directory / MANIFEST_FILE
        lines = manifest.read_text().splitlines()
        entry = ManifestEntry.from_line(lines[0])
        lines[0] = ManifestEntry(entry.path, (*entry.shape, 2), entry.offset, entry.length).to_line()
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(FileOperationError, match=entry.path):
            load_state(directory)

    def test_entry_shape_disagrees_with_spec(self, saved):
        directory, _ = saved
        manifest = directory / MANIFEST_FILE
        lines = manifest.read_text().splitlines()
        index = next(i for i, line in enumerate(lines) if len(set(ManifestEntry.from_line(line).shape)) > 1)
        entry = ManifestEntry.from_line(lines[index])
        lines[index] = ManifestEntry(entry.path, entry.shape[::-1], entry.offset, entry.length).to_line()
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(FileOperationError, match="shapes do not match"):
            load_checkpoint(directory)

    def test_spec_mismatch(self, saved):
        directory, _ = saved
        header = json.loads((directory / HEADER_FILE).read_text())
        header["network"] = NetworkSpec(depth=3, base_channels=4, num_classes=3, channel_reduction=2).to_dict()
        (directory / HEADER_FILE).write_text(json.dumps(header))
        with pytest.raises(FileOperationError, match="does not match"):
            load_checkpoint(directory)

    def test_corrupt_header(self, saved):
        directory, _ = saved
        (directory / HEADER_FILE).write_text("{not json")
        with pytest.raises(FileOperationError):
            read_header(directory)
