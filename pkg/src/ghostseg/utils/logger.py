import logging
import sys
from pathlib import Path

from platformdirs import user_log_dir
from rich.console import Console


class GhostSegLogger:
    """Centralized logging configuration for GhostSeg."""

    def __init__(self, name: str = "ghostseg", console: Console | None = None, log_dir: Path | None = None):
        self.name = name
        self.console = console
        self.log_dir = log_dir or Path(user_log_dir("ghostseg", appauthor=False))
        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        """Configure and return logger instance."""
        logger = logging.getLogger(self.name)

        if logger.handlers:
            return logger

        logger.setLevel(logging.DEBUG)

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.WARNING)

        formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        # per-epoch training lines only go to the file
        try:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(self.log_dir / "ghostseg.log")
        except OSError:
            logger.warning("Cannot open log file under %s; logging to stderr only", self.log_dir)
        else:
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger

    def debug(self, message: str) -> None:
        self.logger.debug(message)

    def info(self, message: str) -> None:
        self.logger.info(message)

    def warning(self, message: str) -> None:
        """Log warning message."""
        self.logger.warning(message)
        if self.console:
            self.console.print(f"[yellow]⚠[/yellow] {message}")

    def error(self, message: str) -> None:
        """Log error message."""
        self.logger.error(message)
        if self.console:
            self.console.print(f"[red]✗ Error:[/red] {message}")

    def exception(self, message: str) -> None:
        """Log exception with traceback."""
        self.logger.exception(message)
        if self.console:
            self.console.print(f"[red]✗ Exception:[/red] {message}")


_logger: GhostSegLogger | None = None


def get_logger(console: Console | None = None) -> GhostSegLogger:
    """Get or create the global logger instance."""
    global _logger
    if _logger is None:
        _logger = GhostSegLogger(console=console)
    return _logger
