"""Per-user directories and the JSON run configuration.

A run configuration has five optional sections::

    {
      "network":      NetworkSpec fields,
      "training":     TrainConfig fields,
      "data":         DataConfig fields,
      "augmentation": AugmentPolicy fields,
      "phantom":      PhantomSpec fields
    }

Missing keys take their defaults; unknown sections or keys are rejected with
the dotted key in the message.
"""

from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any

from platformdirs import user_data_dir, user_log_dir

from ..nn.network import NetworkSpec
from ..services.dataset import AugmentPolicy, DatasetLayout
from ..services.phantom import PhantomSpec
from ..services.training import TrainConfig
from ..utils.common import ConfigHelper, FileOperations
from .exceptions import ConfigurationError

RESOLVED_CONFIG_FILE = "resolved_config.json"
DATA_SOURCES = ("directory", "phantom")


class Config:
    def __init__(self):
        self.data_dir = self._get_data_dir()
        self.data_dir.mkdir(parents=True, exist_ok=True)

        self.runs_dir = self.data_dir / "runs"
        self.log_dir = Path(user_log_dir("ghostseg", appauthor=False))

    def _get_data_dir(self) -> Path:
        return Path(user_data_dir("ghostseg", appauthor=False))

    def new_run_dir(self, prefix: str = "run") -> Path:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return self.runs_dir / f"{prefix}_{timestamp}"


@dataclass(frozen=True)
class DataConfig:
    source: str = "directory"
    root: str = ""
    target_size: int = 256
    num_classes: int = 4
    center_crop: float | None = None
    split: tuple[float, float, float] = (0.7, 0.2, 0.1)
    class_names: tuple[str, ...] = ("background", "VAT", "SAT", "liver")
    phantom_count: int = 200
    image_dir: str = "images"
    mask_dir: str = "masks"
    extension: str = ".png"

    def __post_init__(self):
        if self.source not in DATA_SOURCES:
            raise ConfigurationError(f"data.source must be one of {DATA_SOURCES}, got {self.source!r}")  # noqa: TRY003
        if self.target_size < 1:
            raise ConfigurationError(f"data.target_size must be positive, got {self.target_size}")  # noqa: TRY003
        if self.center_crop is not None and not 0.0 < self.center_crop <= 1.0:
            raise ConfigurationError(f"data.center_crop must be in (0, 1], got {self.center_crop}")  # noqa: TRY003
        if len(self.split) != 3:
            raise ConfigurationError(f"data.split needs three ratios, got {list(self.split)}")  # noqa: TRY003
        if self.phantom_count < 1:
            raise ConfigurationError(f"data.phantom_count must be positive, got {self.phantom_count}")  # noqa: TRY003

    @property
    def layout(self) -> DatasetLayout:
        return DatasetLayout(self.image_dir, self.mask_dir, self.extension)


SECTIONS: dict[str, type] = {
    "network": NetworkSpec,
    "training": TrainConfig,
    "data": DataConfig,
    "augmentation": AugmentPolicy,
    "phantom": PhantomSpec,
}


@dataclass(frozen=True)
class RunConfig:
    network: NetworkSpec = field(default_factory=NetworkSpec)
    training: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    augmentation: AugmentPolicy = field(default_factory=AugmentPolicy)
    phantom: PhantomSpec = field(default_factory=PhantomSpec)

    def __post_init__(self):
        if self.data.num_classes != self.network.num_classes:
            raise ConfigurationError(  # noqa: TRY003
                f"data.num_classes ({self.data.num_classes}) != network.num_classes ({self.network.num_classes})"
            )
        if self.data.source == "phantom" and self.phantom.num_classes != self.network.num_classes:
            raise ConfigurationError(  # noqa: TRY003
                f"phantom.include_organ={self.phantom.include_organ} yields {self.phantom.num_classes} classes, "
                f"network.num_classes is {self.network.num_classes}"
            )

    def require_data_root(self) -> Path:
        if not self.data.root:
            raise ConfigurationError("data.root is required when data.source is 'directory'")  # noqa: TRY003
        return Path(self.data.root)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("Run configuration must be a JSON object")  # noqa: TRY003
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigurationError(f"Unknown configuration section '{unknown[0]}'", error_code="UNKNOWN_KEY")  # noqa: TRY003
        sections = {}
        for name, section_cls in SECTIONS.items():
            values = data.get(name) or {}
            if not isinstance(values, dict):
                raise ConfigurationError(f"Configuration section '{name}' must be an object")  # noqa: TRY003
            sections[name] = ConfigHelper.build_dataclass(section_cls, values, name)
        return cls(**sections)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Configuration file not found: {path}")  # noqa: TRY003
        return cls.from_dict(FileOperations.safe_read_json(path))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, training=replace(self.training, seed=seed))

    def to_dict(self) -> dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def write_resolved(self, directory: str | Path) -> Path:
        path = Path(directory) / RESOLVED_CONFIG_FILE
        FileOperations.safe_write_json(path, self.to_dict())
        return path
