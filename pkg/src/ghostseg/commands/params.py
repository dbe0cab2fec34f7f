from pathlib import Path

from rich.console import Console

from ..core.config import RunConfig
from ..nn.network import AttentionGhostUNetPP, NetworkSpec, ParameterReport, parameter_report
from ..utils.formatter import MetricsFormatter


class ParamsCommand:
    def __init__(self, console: Console):
        self.console = console
        self.formatter = MetricsFormatter(self.console)

    def execute(self, config_path: Path | None = None) -> ParameterReport:
        spec = RunConfig.from_file(config_path).network if config_path is not None else NetworkSpec()
        report = parameter_report(AttentionGhostUNetPP(spec))
        self.console.print(self.formatter.format_parameter_table(report))
        self.console.print(
            f"[dim]depth={spec.depth} base_channels={spec.base_channels} ghost_ratio={spec.ghost_ratio}[/dim]"
        )
        return report
