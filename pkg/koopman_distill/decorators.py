"""
Shared decorators for koopman-distill commands

Keeps option names and help texts identical across subcommands.
"""

from functools import wraps

import click

from koopman_distill.models.config import METHODS


def json_output_option(f):
    """
    Decorator to add --json flag to commands.

    Both patterns work:
    - Global: koopman-distill --json experiment ...
    - Command: koopman-distill experiment ... --json

    The command-level flag takes precedence if both are specified.

    Usage:
        @click.command()
        @json_output_option
        @click.pass_obj
        def my_command(ctx, output_json, ...):
            json_mode = ctx.resolve_json(output_json)
    """
    @wraps(f)
    def wrapper(*args, **kwargs):
        return f(*args, **kwargs)

    return click.option(
        '--json',
        'output_json',
        is_flag=True,
        default=None,
        help='Output pure JSON'
    )(wrapper)


def config_option(f):
    """Decorator to add --config (experiment file, JSON or YAML)."""
    return click.option(
        '--config', 'config_file',
        type=click.Path(exists=True, dir_okay=False),
        help='Experiment config file (JSON or YAML); falls back to KOOPMAN_DISTILL_CONFIG'
    )(f)


def student_options(f):
    """Decorator to add --pca-dim and --degree overrides."""
    f = click.option('--degree', type=click.IntRange(min=0), help='Maximum monomial degree d')(f)
    f = click.option('--pca-dim', type=click.IntRange(min=1), help='Number of PCA components D')(f)
    return f


def seed_option(multiple: bool = False):
    """
    Decorator factory to add --seed.

    With ``multiple`` the option is repeatable (experiment sweeps); otherwise
    a single seed defaults to the first seed of the config.
    """
    def decorator(f):
        return click.option(
            '--seed', 'seeds' if multiple else 'seed',
            type=click.IntRange(min=0),
            multiple=multiple,
            help='Run seed (repeatable)' if multiple else 'Run seed (default: first config seed)'
        )(f)
    return decorator


def method_option(f):
    """Decorator to add a repeatable --method filter."""
    return click.option(
        '--method', 'methods',
        type=click.Choice(list(METHODS)),
        multiple=True,
        help='Student method to run (repeatable)'
    )(f)
