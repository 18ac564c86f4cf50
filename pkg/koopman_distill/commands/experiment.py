"""
Multi-seed experiments and PCA diagnostics
"""

import sys
from pathlib import Path
from typing import Optional, Tuple

import click

from koopman_distill.commands import load_named_split
from koopman_distill.config import load_config, validate_config
from koopman_distill.decorators import (
    config_option,
    json_output_option,
    method_option,
    seed_option,
    student_options,
)
from koopman_distill.error_handler import KoopmanDistillError
from koopman_distill.harness import DEFAULT_RATIOS, pca_report, run_experiment
from koopman_distill.models.context import CliContext
from koopman_distill.models.result import CommandResult
from koopman_distill.utils.output import exit_with_error, format_table


@click.command(name='experiment')
@config_option
@seed_option(multiple=True)
@student_options
@method_option
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Report directory (overrides output.dir)')
@json_output_option
@click.pass_obj
def experiment_cmd(
    ctx: CliContext,
    config_file: Optional[str],
    seeds: Tuple[int, ...],
    pca_dim: Optional[int],
    degree: Optional[int],
    methods: Tuple[str, ...],
    out_dir: Optional[str],
    output_json: Optional[bool],
) -> None:
    """Run every method for every seed and write CSV/JSON reports

    Per-seed failures are recorded in the report (marked partial) and the
    command exits with status 1.

    \b
    Examples:
        koopman-distill experiment --config mnist.json
        koopman-distill experiment --config mnist.json --seed 1 --seed 2 --method distill --degree 3
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(
            config_file, seeds=seeds, pca_dim=pca_dim, degree=degree, methods=methods, out=out_dir
        )
        validate_config(config)
        report = run_experiment(config)
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return

    out = Path(config.output.dir)
    data = {
        'csv': str(out / config.output.csv),
        'json': str(out / config.output.json),
        'partial': report.partial,
        'summaries': [s.to_dict() for s in report.summaries()],
        'errors': report.errors,
    }
    if json_mode:
        ctx.output(CommandResult.success_result(data), json_mode)
    else:
        rows = [
            {
                'method': s['method'],
                'seeds': s['count'],
                'mean_%': None if s['mean'] is None else 100.0 * s['mean'],
                'std_%': None if s['std'] is None else 100.0 * s['std'],
            }
            for s in data['summaries']
        ]
        format_table(rows, title='Test accuracy', console=ctx.console)
        for err in report.errors:
            ctx.console.print(f"[red]✗[/red] seed {err['seed']} {err['method']}: {err['error']}")
        ctx.console.print(f"Reports: {data['csv']}, {data['json']}")

    if report.partial:
        sys.exit(1)


@click.command(name='pca-report')
@config_option
@click.option('--max-dim', type=click.IntRange(min=1), help='Largest number of components to compute')
@click.option('--ratio', 'ratios', type=click.FloatRange(0.0, 1.0, min_open=True), multiple=True,
              help='Cumulative contribution ratio to report D for (repeatable)')
@json_output_option
@click.pass_obj
def pca_report_cmd(
    ctx: CliContext,
    config_file: Optional[str],
    max_dim: Optional[int],
    ratios: Tuple[float, ...],
    output_json: Optional[bool],
) -> None:
    """Explained variance of the training split and D per contribution ratio

    \b
    Examples:
        koopman-distill pca-report --config mnist.json --max-dim 100
        koopman-distill pca-report --config mnist.json --ratio 0.9 --json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file)
        features, _ = load_named_split(config, 'train')
        data = pca_report(features, max_dim, ratios or DEFAULT_RATIOS)
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return

    if json_mode:
        ctx.output(CommandResult.success_result(data), json_mode)
    else:
        format_table(data['components'], title='Principal components', console=ctx.console)
        for ratio, dim in data['required'].items():
            ctx.console.print(f"cumulative ratio {ratio}: D = {dim}")
