import os
from pathlib import Path

from ..core.exceptions import ValidationError
from ..nn.checkpoint import HEADER_FILE, MANIFEST_FILE, WEIGHTS_FILE


class ParameterValidator:
    """Validates command-line parameters."""

    @staticmethod
    def validate_file_path(file_path: Path) -> Path:
        """Validate file path exists and is readable."""
        if not file_path.exists():
            raise ValidationError(f"File does not exist: {file_path}")  # noqa: TRY003

        if not file_path.is_file():
            raise ValidationError(f"Path is not a file: {file_path}")  # noqa: TRY003

        if not os.access(file_path, mode=os.R_OK):
            raise ValidationError(f"File is not readable: {file_path}")  # noqa: TRY003

        return file_path

    @staticmethod
    def validate_directory(dir_path: Path) -> Path:
        if not dir_path.exists():
            raise ValidationError(f"Directory does not exist: {dir_path}")  # noqa: TRY003

        if not dir_path.is_dir():
            raise ValidationError(f"Path is not a directory: {dir_path}")  # noqa: TRY003

        return dir_path

    @staticmethod
    def validate_output_dir(dir_path: Path) -> Path:
        """Create the directory if needed and check it is writable."""
        try:
            dir_path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ValidationError(f"Cannot create output directory: {e}") from e  # noqa: TRY003

        if not os.access(dir_path, mode=os.W_OK):
            raise ValidationError(f"Output directory is not writable: {dir_path}")  # noqa: TRY003

        return dir_path

    @staticmethod
    def validate_output_path(output_path: str) -> str:
        """Validate output path."""
        if not output_path:
            return output_path

        output_dir = os.path.dirname(output_path)
        if output_dir and not os.path.exists(output_dir):
            try:
                os.makedirs(output_dir, exist_ok=True)
            except OSError as e:
                raise ValidationError(f"Cannot create output directory: {e}") from e  # noqa: TRY003

        if output_dir and not os.access(output_dir, mode=os.W_OK):
            raise ValidationError(f"Output directory is not writable: {output_dir}")  # noqa: TRY003

        return output_path

    @staticmethod
    def validate_checkpoint(checkpoint_dir: Path) -> Path:
        ParameterValidator.validate_directory(checkpoint_dir)
        missing = [name for name in (MANIFEST_FILE, WEIGHTS_FILE, HEADER_FILE) if not (checkpoint_dir / name).is_file()]
        if missing:
            raise ValidationError(f"Checkpoint {checkpoint_dir} is missing {', '.join(missing)}")  # noqa: TRY003
        return checkpoint_dir

    @staticmethod
    def validate_positive(value: int, name: str) -> int:
        if value < 1:
            raise ValidationError(f"{name} must be a positive integer, got {value}")  # noqa: TRY003
        return value

    @staticmethod
    def validate_seed(seed: int) -> int:
        if not 0 <= seed < 2**32:
            raise ValidationError(f"Seed must be in 0..2**32-1, got {seed}")  # noqa: TRY003
        return seed

    @staticmethod
    def validate_num_classes(num_classes: int) -> int:
        if num_classes < 2:
            raise ValidationError(f"Number of classes must be >= 2, got {num_classes}")  # noqa: TRY003
        return num_classes
