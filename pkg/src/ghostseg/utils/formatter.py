import csv
import io
import json
from collections.abc import Sequence
from pathlib import Path

from rich.console import Console
from rich.table import Table

from ..core.exceptions import FileOperationError
from ..models import MetricsRow
from ..nn.network import ParameterReport


class MetricsFormatter:
    """Results tables: one row per (method, metric), one column per foreground class."""

    def __init__(self, console: Console):
        self.console = console

    @staticmethod
    def class_columns(rows: Sequence[MetricsRow]) -> list[str]:
        columns: list[str] = []
        for row in rows:
            columns.extend(name for name in row.values if name not in columns)
        return columns

    def format_table(self, rows: Sequence[MetricsRow], title: str | None = None) -> Table:
        table = Table(show_header=True, header_style="bold magenta", title=title)
        table.add_column("Method", style="cyan", no_wrap=True)
        table.add_column("Metric", style="yellow")
        columns = self.class_columns(rows)
        for name in columns:
            table.add_column(name, justify="right")
        table.add_column("Mean", justify="right", style="bright_green")

        for row in rows:
            cells = [self._format_value(row.values.get(name)) for name in columns]
            table.add_row(row.method, row.metric, *cells, self._format_value(row.mean))
        return table

    @staticmethod
    def _format_value(value: float | None) -> str:
        return "-" if value is None else f"{value:.4f}"

    def format_delimited(self, rows: Sequence[MetricsRow], delimiter: str = ",") -> str:
        if not rows:
            return ""
        columns = self.class_columns(rows)
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["Method", "Metric", *columns, "Mean"])
        for row in rows:
            values = [f"{row.values[name]:.6f}" if name in row.values else "" for name in columns]
            writer.writerow([row.method, row.metric, *values, f"{row.mean:.6f}"])
        return buffer.getvalue()

    def format_json(self, rows: Sequence[MetricsRow]) -> str:
        return json.dumps([row.to_dict() for row in rows], indent=2)

    def format_parameter_table(self, report: ParameterReport) -> Table:
        table = Table(show_header=True, header_style="bold magenta", title="Parameters")
        table.add_column("Group", style="cyan")
        table.add_column("Count", justify="right")
        for group, count in report.groups.items():
            table.add_row(group, f"{count:,}")
        table.add_row("[bold]total[/bold]", f"[bold]{report.total:,}[/bold]")
        table.add_row("dense twin", f"{report.dense_twin_total:,}")
        table.add_row("dense / ghost", f"{report.ratio:.3f}")
        table.add_row("ghost / dense", f"{report.fraction_of_dense:.3f}")
        table.add_row("bottleneck nodes", str(report.bottleneck_nodes))
        return table

    def write_to_file(
        self, rows: Sequence[MetricsRow], output_file: str | Path, file_format: str | None = None
    ) -> Path:
        """Write ``file_format`` (json, tsv or csv), or infer it from the suffix: anything unknown is csv."""
        path = Path(output_file)
        file_format = file_format or path.suffix.lower().lstrip(".")
        if file_format == "json":
            content = self.format_json(rows)
        else:
            content = self.format_delimited(rows, "\t" if file_format == "tsv" else ",")

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
        except OSError as e:
            raise FileOperationError(f"Error writing results to {path}: {e}") from e  # noqa: TRY003

        self.console.print(f"[green]✓[/green] Results written to [cyan]{path}[/cyan]")
        return path
