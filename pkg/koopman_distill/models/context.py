"""
CLI context model for sharing state across commands
"""

from dataclasses import dataclass
from typing import Any, Optional

import click
from rich.console import Console
from rich.pretty import pprint

from koopman_distill.models.result import CommandResult


@dataclass
class CliContext:
    """Shared state across Click commands"""

    json_mode: bool
    console: Console
    verbose: bool = False

    def resolve_json(self, output_json: Optional[bool]) -> bool:
        """Command-level --json wins over the global flag."""
        return output_json if output_json is not None else self.json_mode

    def output(self, result: CommandResult, json_mode: Optional[bool] = None) -> None:
        """Output result based on mode (JSON or Rich)"""
        if self.resolve_json(json_mode):
            click.echo(result.to_json())
        elif result.success:
            self._format_success_output(result.data)
        else:
            self.console.print(f"[red]✗ {result.error}[/red]")
            if result.details:
                self.console.print(f"  Details: {result.details}")
            if result.suggestion:
                self.console.print(f"  [yellow]Suggestion: {result.suggestion}[/yellow]")

    def _format_success_output(self, data: Any) -> None:
        """Format successful output for console display"""
        if isinstance(data, list) and data and isinstance(data[0], dict):
            from koopman_distill.utils.output import format_table
            format_table(data, console=self.console)
        elif isinstance(data, dict):
            pprint(data, console=self.console, expand_all=True)
        else:
            self.console.print(str(data))
