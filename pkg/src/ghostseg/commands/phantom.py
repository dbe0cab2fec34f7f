from dataclasses import replace
from pathlib import Path

from rich.console import Console

from ..core.config import RESOLVED_CONFIG_FILE
from ..services.phantom import PhantomSpec, materialize_phantoms
from ..utils.common import ConfigHelper, FileOperations


class PhantomCommand:
    def __init__(self, console: Console):
        self.console = console

    def execute(self, spec_path: Path | None, n: int, out: Path, seed: int | None = None) -> list[str]:
        spec = self.load_spec(spec_path)
        if seed is not None:
            spec = replace(spec, seed=seed)

        with self.console.status(f"[bold blue]Generating {n} phantom(s)...", spinner="dots"):
            stems = materialize_phantoms(spec, n, out)

        FileOperations.safe_write_json(Path(out) / RESOLVED_CONFIG_FILE, {"phantom": spec.to_dict(), "n": n})
        self.console.print(f"[green]✓[/green] Wrote {len(stems)} image/mask pair(s) to [cyan]{out}[/cyan]")
        return stems

    @staticmethod
    def load_spec(spec_path: Path | None) -> PhantomSpec:
        """Either a bare PhantomSpec object or a run configuration with a ``phantom`` section."""
        if spec_path is None:
            return PhantomSpec()
        data = FileOperations.safe_read_json(spec_path)
        if "phantom" in data:
            data = data["phantom"]
        return ConfigHelper.build_dataclass(PhantomSpec, data, "phantom")
