import json
import os
from dataclasses import MISSING, fields, is_dataclass
from pathlib import Path
from typing import Any, TypeVar

from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
)

from ..core.exceptions import ConfigurationError, FileOperationError

T = TypeVar("T")


class FileOperations:
    """Common file operation utilities."""

    @staticmethod
    def safe_read_json(file_path: str | Path) -> dict[str, Any]:
        """Read a JSON object; a missing file reads as an empty dict."""
        try:
            with open(file_path, encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError:
            return {}
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in {file_path}: {e}") from e  # noqa: TRY003
        except OSError as e:
            raise FileOperationError(f"Error reading {file_path}: {e}") from e  # noqa: TRY003

    @staticmethod
    def safe_write_json(file_path: str | Path, data: dict[str, Any]) -> None:
        try:
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)
            with open(file_path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2)
        except OSError as e:
            raise FileOperationError(f"Error writing {file_path}: {e}") from e  # noqa: TRY003

    @staticmethod
    def write_jsonl(file_path: str | Path, records: list[dict[str, Any]]) -> None:
        """One JSON object per line, keys in insertion order."""
        try:
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)
            with open(file_path, "w", encoding="utf-8") as f:
                f.writelines(json.dumps(record) + "\n" for record in records)
        except OSError as e:
            raise FileOperationError(f"Error writing {file_path}: {e}") from e  # noqa: TRY003

    @staticmethod
    def read_jsonl(file_path: str | Path) -> list[dict[str, Any]]:
        try:
            with open(file_path, encoding="utf-8") as f:
                return [json.loads(line) for line in f if line.strip()]
        except (OSError, json.JSONDecodeError) as e:
            raise FileOperationError(f"Error reading {file_path}: {e}") from e  # noqa: TRY003

    @staticmethod
    def ensure_directory(dir_path: str | Path) -> Path:
        path = Path(dir_path)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def file_exists_and_readable(file_path: str | Path) -> bool:
        return os.path.exists(file_path) and os.access(file_path, os.R_OK)


class ProgressFactory:
    """Factory for creating consistent progress bars."""

    @staticmethod
    def create_training_progress(console: Console):
        return Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            TextColumn("[cyan]{task.fields[status]}"),
            console=console,
        )

    @staticmethod
    def create_processing_progress(console: Console, description: str):
        return Progress(
            SpinnerColumn(),
            TextColumn(f"[bold blue]{description}"),
            BarColumn(),
            TaskProgressColumn(),
            transient=True,
            console=console,
        )


class ConfigHelper:
    """Configuration management utilities."""

    @staticmethod
    def build_dataclass(cls: type[T], data: dict[str, Any] | None, section: str) -> T:
        """Instantiate a config dataclass, rejecting keys it does not declare.

        Lists are turned into tuples where the field default is a tuple, since
        JSON has no tuple type.
        """
        if not is_dataclass(cls):
            raise TypeError(f"{cls!r} is not a dataclass")  # noqa: TRY003
        data = dict(data or {})
        declared = {f.name: f for f in fields(cls)}

        unknown = sorted(set(data) - set(declared))
        if unknown:
            raise ConfigurationError(  # noqa: TRY003
                f"Unknown configuration key '{section}.{unknown[0]}'"
                + (f" (and {len(unknown) - 1} more)" if len(unknown) > 1 else ""),
                error_code="UNKNOWN_KEY",
            )

        kwargs = {}
        for name, value in data.items():
            default = declared[name].default
            if isinstance(value, list) and default is not MISSING and isinstance(default, tuple):
                value = tuple(value)
            kwargs[name] = value

        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigurationError(f"Invalid '{section}' section: {e}") from e  # noqa: TRY003
