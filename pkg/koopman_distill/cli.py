"""
Main CLI entry point for koopman-distill
"""

import logging
import sys

import click
from rich.console import Console
from rich.logging import RichHandler

from koopman_distill import __version__
from koopman_distill.config import json_mode_from_env
from koopman_distill.error_handler import create_error
from koopman_distill.models.context import CliContext
from koopman_distill.utils.output import exit_with_error


def configure_logging(verbose: bool, console: Console) -> None:
    """Route package logs through rich on stderr; DEBUG with --verbose, else WARNING."""
    root = logging.getLogger('koopman_distill')
    root.handlers.clear()
    handler = RichHandler(console=console, show_path=False, markup=False)
    handler.setFormatter(logging.Formatter('%(message)s'))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)


@click.group(invoke_without_command=True)
@click.option('--json', is_flag=True, help='Output pure JSON to stdout')
@click.option('--verbose', '-v', is_flag=True, help='Log progress and numerical details to stderr')
@click.version_option(__version__, prog_name='koopman-distill')
@click.pass_context
def cli(ctx, json, verbose):
    """
    Extract a linear Koopman classifier from a trained MLP.

    \b
    TYPICAL WORKFLOW:
        koopman-distill train-teacher --config mnist.json --out teacher.json
        koopman-distill distill --config mnist.json --teacher teacher.json --out student.json
        koopman-distill evaluate student.json --config mnist.json

    \b
    FULL TABLE (all methods, all seeds):
        koopman-distill experiment --config mnist.json --out reports/
    """
    # KOOPMAN_DISTILL_JSON=1 turns on JSON mode for every invocation
    json_mode = json or json_mode_from_env()

    console = Console(stderr=True)
    configure_logging(verbose, console)

    ctx.obj = CliContext(json_mode=json_mode, console=console, verbose=verbose)

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


from koopman_distill.commands import evaluate, experiment, fit, teacher  # noqa: E402

cli.add_command(teacher.train_teacher_cmd)
cli.add_command(teacher.export_logits_cmd)
cli.add_command(fit.fit_naive_cmd)
cli.add_command(fit.fit_naive_pca_cmd)
cli.add_command(fit.distill_cmd)
cli.add_command(evaluate.evaluate_cmd)
cli.add_command(experiment.experiment_cmd)
cli.add_command(experiment.pca_report_cmd)


def main():
    """Main entry point for the CLI"""
    try:
        cli(standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.Abort:
        click.echo("Aborted!", err=True)
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except Exception as e:
        # Last-resort handler for errors the commands did not categorize
        json_mode = '--json' in sys.argv or json_mode_from_env()
        exit_with_error(create_error(e), Console(stderr=True), json_mode)


if __name__ == '__main__':
    main()
