"""
Utility functions for output formatting and JSON handling
"""

import sys
from typing import Any, Dict, List, Optional

import click
from rich import box
from rich.console import Console
from rich.table import Table

from koopman_distill.error_handler import KoopmanDistillError
from koopman_distill.models.result import CommandResult


def _cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return '✓' if value else '✗'
    if isinstance(value, float):
        return f'{value:.4f}'
    if isinstance(value, (list, tuple)):
        return ', '.join(map(str, value))
    return str(value)


def format_table(
    data: List[Dict[str, Any]],
    columns: Optional[List[str]] = None,
    title: Optional[str] = None,
    console: Optional[Console] = None
) -> None:
    """
    Format rows as a Rich table on stderr

    Args:
        data: List of dictionaries to display
        columns: Column names to display (None for all keys of the first row)
        title: Table title
        console: Rich console instance (stderr)
    """
    console = console or Console(stderr=True)
    if not data:
        console.print("[yellow]No rows[/yellow]")
        return

    if columns is None:
        columns = list(data[0].keys())

    table = Table(
        title=title,
        box=box.SIMPLE,
        show_header=True,
        header_style="bold cyan"
    )
    for col in columns:
        table.add_column(col.replace('_', ' ').title())
    for row in data:
        table.add_row(*[_cell(row.get(col)) for col in columns])

    console.print(table)


def output_error(
    result: CommandResult,
    console: Optional[Console] = None,
    json_mode: bool = False,
) -> None:
    """
    Output a failed CommandResult and exit with its code

    Args:
        result: Failure envelope
        console: Rich console for non-JSON output
        json_mode: Whether to output JSON
    """
    if json_mode:
        click.echo(result.to_json())
    else:
        console = console or Console(stderr=True)
        console.print(f"[red]✗ Error:[/red] {result.error}")
        if result.details:
            console.print(f"  [dim]{result.details}[/dim]")
        if result.suggestion:
            console.print(f"  [yellow]→[/yellow] {result.suggestion}")

    sys.exit(result.get_exit_code())


def exit_with_error(
    error: KoopmanDistillError,
    console: Optional[Console] = None,
    json_mode: bool = False
) -> None:
    """Emit a categorized error as a CommandResult and exit with its code."""
    output_error(CommandResult.from_error(error), console=console, json_mode=json_mode)
