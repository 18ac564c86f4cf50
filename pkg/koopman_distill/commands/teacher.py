"""
Teacher commands: train the MLP and export its logits
"""

from typing import Optional

import click

from koopman_distill.commands import has_split, load_named_split
from koopman_distill.config import load_config
from koopman_distill.decorators import config_option, json_output_option, seed_option
from koopman_distill.error_handler import KoopmanDistillError
from koopman_distill.harness import evaluate_accuracy
from koopman_distill.models.context import CliContext
from koopman_distill.models.result import CommandResult
from koopman_distill.teacher import MlpArchitecture, export_logits, init_mlp, load_teacher, save_teacher, train_teacher
from koopman_distill.utils.output import exit_with_error, format_table


@click.command(name='train-teacher')
@config_option
@seed_option()
@click.option('--epochs', type=click.IntRange(min=0), help='Override teacher.epochs')
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='Teacher model file to write')
@json_output_option
@click.pass_obj
def train_teacher_cmd(
    ctx: CliContext,
    config_file: Optional[str],
    seed: Optional[int],
    epochs: Optional[int],
    out_path: str,
    output_json: Optional[bool],
) -> None:
    """Train the teacher MLP on the training split and save it

    \b
    Examples:
        koopman-distill train-teacher --config mnist.json --seed 3 --out teacher.json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file)
        if epochs is not None:
            config.teacher.epochs = epochs
        run_seed = seed if seed is not None else config.seeds[0]

        features, labels = load_named_split(config, 'train')
        architecture = MlpArchitecture.from_config(config.teacher)
        mlp, logs = train_teacher(init_mlp(architecture, run_seed), features, labels, config.teacher, run_seed)
        save_teacher(mlp, out_path)

        data = {
            'model': out_path,
            'seed': run_seed,
            'architecture': architecture.to_dict(),
            'epochs': [entry.to_dict() for entry in logs],
        }
        if has_split(config, 'test'):
            test_x, test_y = load_named_split(config, 'test')
            data['test_accuracy'] = evaluate_accuracy(mlp, test_x, test_y)
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return

    if json_mode:
        ctx.output(CommandResult.success_result(data), json_mode)
    else:
        format_table(data['epochs'], title=f'Teacher training (seed {run_seed})', console=ctx.console)
        if 'test_accuracy' in data:
            ctx.console.print(f"Test accuracy: [bold]{data['test_accuracy']:.4f}[/bold]")
        ctx.console.print(f"[green]✓[/green] Saved teacher to {out_path}")


@click.command(name='export-logits')
@click.argument('model_path', type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option('--split', type=click.Choice(['train', 'test']), default='train', show_default=True,
              help='Dataset split to evaluate')
@click.option('--provenance', help='Free-form provenance text stored in the file')
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='Logits file to write')
@json_output_option
@click.pass_obj
def export_logits_cmd(
    ctx: CliContext,
    model_path: str,
    config_file: Optional[str],
    split: str,
    provenance: Optional[str],
    out_path: str,
    output_json: Optional[bool],
) -> None:
    """Write a saved teacher's logits for one dataset split

    \b
    Examples:
        koopman-distill export-logits teacher.json --config mnist.json --out train-logits.json
        koopman-distill export-logits teacher.json --config mnist.json --split test --out test-logits.json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file)
        mlp = load_teacher(model_path)
        features, _ = load_named_split(config, split)
        logits_file = export_logits(
            mlp, features, out_path,
            provenance=provenance or f'koopman-distill teacher {model_path} ({config.dataset.name} {split})',
        )
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return

    data = {
        'path': out_path,
        'count': logits_file.count,
        'classes': logits_file.classes,
        'provenance': logits_file.provenance,
    }
    if json_mode:
        ctx.output(CommandResult.success_result(data), json_mode)
    else:
        ctx.console.print(
            f"[green]✓[/green] Wrote {data['count']}x{data['classes']} logits to {out_path}"
        )
