"""Tests for command classes."""

import io
import json

import numpy as np
import pytest
from rich.console import Console
from skimage import io as skio

from ghostseg.commands import (
    EvaluateCommand,
    ParamsCommand,
    PhantomCommand,
    PredictCommand,
    ReportCommand,
    TrainCommand,
)
from ghostseg.core.config import RESOLVED_CONFIG_FILE
from ghostseg.core.exceptions import ConfigurationError, DataError
from ghostseg.nn.checkpoint import save_checkpoint
from ghostseg.nn.network import NetworkSpec, build_network
from ghostseg.services.phantom import PhantomSpec


@pytest.fixture
def console():
    return Console(file=io.StringIO(), width=120)


@pytest.fixture
def checkpoint(tmp_path):
    net = build_network(NetworkSpec(depth=2, base_channels=4, num_classes=4, channel_reduction=2), seed=0)
    metadata = {"target_size": 32, "center_crop": None, "class_names": ["background", "VAT", "SAT", "liver"]}
    return save_checkpoint(net, tmp_path / "ckpt", seed=0, metadata=metadata)


class TestPhantomCommand:
    """Test cases for PhantomCommand class."""

    def test_load_spec_default(self):
        """Test default spec without a file."""
        assert PhantomCommand.load_spec(None) == PhantomSpec()

    def test_load_spec_bare_and_section(self, tmp_path):
        """Test both accepted file shapes."""
        bare = tmp_path / "bare.json"
        bare.write_text(json.dumps({"size": 32, "seed": 4}))
        section = tmp_path / "run.json"
        section.write_text(json.dumps({"phantom": {"size": 32, "seed": 4}, "network": {}}))
        assert PhantomCommand.load_spec(bare) == PhantomCommand.load_spec(section) == PhantomSpec(size=32, seed=4)

    def test_load_spec_unknown_key(self, tmp_path):
        """Test rejection of unknown keys."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"sise": 32}))
        with pytest.raises(ConfigurationError, match="phantom.sise"):
            PhantomCommand.load_spec(path)

    def test_execute(self, tmp_path, console):
        """Test writing a phantom dataset."""
        stems = PhantomCommand(console).execute(None, 3, tmp_path / "out", seed=2)
        assert len(stems) == 3
        assert len(list((tmp_path / "out" / "images").glob("*.png"))) == 3
        assert len(list((tmp_path / "out" / "masks").glob("*.png"))) == 3
        resolved = json.loads((tmp_path / "out" / RESOLVED_CONFIG_FILE).read_text())
        assert resolved["phantom"]["seed"] == 2
        assert resolved["n"] == 3


class TestParamsCommand:
    """Test cases for ParamsCommand class."""

    def test_execute_with_config(self, tiny_config_file, console):
        """Test report for a configured network."""
        report = ParamsCommand(console).execute(tiny_config_file)
        assert report.bottleneck_nodes == 3
        assert "dense twin" in console.file.getvalue()

    def test_execute_default(self, console):
        """Test report for the default network."""
        assert ParamsCommand(console).execute(None).bottleneck_nodes == 15


class TestEvaluateCommand:
    """Test cases for EvaluateCommand class."""

    def test_oracle_only(self, phantom_dir, console):
        """Test ground truth scored against itself."""
        rows = EvaluateCommand(console).execute([], phantom_dir, classes=4, oracle=True)
        assert [row.metric for row in rows] == ["Dice coefficient", "Jaccard index"]
        assert all(value == 1.0 for row in rows for value in row.values.values())
        assert list(rows[0].values) == ["VAT", "SAT", "liver"]

    def test_nothing_to_evaluate(self, phantom_dir, console):
        """Test missing checkpoint and oracle."""
        with pytest.raises(ConfigurationError):
            EvaluateCommand(console).execute([], phantom_dir, classes=4)

    def test_oracle_needs_classes(self, phantom_dir, console):
        """Test oracle without class count."""
        with pytest.raises(ConfigurationError, match="--classes"):
            EvaluateCommand(console).execute([], phantom_dir, oracle=True)

    def test_checkpoint_and_output(self, phantom_dir, checkpoint, tmp_path, console):
        """Test evaluating a checkpoint and writing the table."""
        output = tmp_path / "table.json"
        rows = EvaluateCommand(console).execute([checkpoint], phantom_dir, oracle=True, output=str(output))
        assert len(rows) == 4
        assert rows[2].method == "Attention GhostUNet++"
        for row in rows[2:]:
            assert all(0.0 <= value <= 1.0 for value in row.values.values())
        assert len(json.loads(output.read_text())) == 4

    def test_class_mismatch(self, phantom_dir, checkpoint, console):
        """Test --classes disagreeing with the checkpoint."""
        with pytest.raises(ConfigurationError):
            EvaluateCommand(console).execute([checkpoint], phantom_dir, classes=3)

    def test_missing_masks(self, tmp_path, phantom_dir, console):
        """Test unpaired images reported as data errors."""
        next((phantom_dir / "masks").iterdir()).unlink()
        with pytest.raises(DataError) as exc_info:
            EvaluateCommand(console).execute([], phantom_dir, classes=4, oracle=True)
        assert "Missing mask" in exc_info.value.errors[0]


class TestPredictCommand:
    """Test cases for PredictCommand class."""

    def test_execute(self, phantom_dir, checkpoint, tmp_path, console):
        """Test one label mask per input slice."""
        written = PredictCommand(console).execute(checkpoint, phantom_dir / "images", tmp_path / "pred")
        assert len(written) == 12
        mask = skio.imread(written[0])
        assert mask.shape == (32, 32)
        assert mask.max() < 4
        assert (tmp_path / "pred" / RESOLVED_CONFIG_FILE).is_file()

    def test_empty_input(self, tmp_path, checkpoint, console):
        """Test input directory without images."""
        (tmp_path / "empty").mkdir()
        with pytest.raises(DataError):
            PredictCommand(console).execute(checkpoint, tmp_path / "empty", tmp_path / "pred")


class TestReportCommand:
    """Test cases for ReportCommand class."""

    def test_execute(self, phantom_dir, checkpoint, tmp_path, console):
        """Test one panel figure per pair."""
        written = ReportCommand(console).execute(
            checkpoint, phantom_dir / "images", phantom_dir / "masks", tmp_path / "figs"
        )
        assert len(written) == 12
        assert written[0].name == "phantom-0000_panels.png"
        assert all(path.is_file() for path in written)

    def test_unmatched(self, phantom_dir, checkpoint, tmp_path, console):
        """Test unpaired files."""
        (phantom_dir / "masks" / "phantom-0000.png").unlink()
        with pytest.raises(DataError):
            ReportCommand(console).execute(checkpoint, phantom_dir / "images", phantom_dir / "masks", tmp_path / "f")


class TestTrainCommand:
    """Test cases for TrainCommand class."""

    def test_execute(self, tiny_config_file, tmp_path, console):
        """Test a short phantom training run."""
        out = tmp_path / "run"
        result = TrainCommand(console).execute(tiny_config_file, seed=1, out=out)

        assert len(result.history) <= 2
        assert (out / "checkpoint" / "manifest.txt").is_file()
        assert (out / "history.jsonl").is_file()
        assert (out / "test_metrics.json").is_file()
        resolved = json.loads((out / RESOLVED_CONFIG_FILE).read_text())
        assert resolved["training"]["seed"] == 1

    def test_directory_source_needs_root(self, tmp_path, console):
        """Test missing data.root."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"network": {"depth": 2, "base_channels": 4}}))
        with pytest.raises(ConfigurationError, match="data.root"):
            TrainCommand(console).execute(path, out=tmp_path / "run")

    def test_directory_source_with_pairing_error(self, tmp_path, phantom_dir, console):
        """Test pairing errors from a directory source."""
        (phantom_dir / "masks" / "phantom-0003.png").unlink()
        path = tmp_path / "run.json"
        config = {"network": {"depth": 2, "base_channels": 4}, "data": {"root": str(phantom_dir), "target_size": 32}}
        path.write_text(json.dumps(config))
        with pytest.raises(DataError) as exc_info:
            TrainCommand(console).execute(path, out=tmp_path / "run")
        assert "phantom-0003.png" in exc_info.value.errors[0]


def test_masks_written_as_labels(phantom_dir):
    """Ground-truth PNGs hold raw class ids."""
    mask = skio.imread(phantom_dir / "masks" / "phantom-0000.png")
    assert set(np.unique(mask)) <= {0, 1, 2, 3}
