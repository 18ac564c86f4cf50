"""
Evaluate a saved teacher or student on a dataset split
"""

from typing import Optional, Tuple

import click

from koopman_distill.commands import load_named_split
from koopman_distill.config import load_config
from koopman_distill.decorators import config_option, json_output_option
from koopman_distill.error_handler import KoopmanDistillError, ModelFileError
from koopman_distill.harness import Classifier, evaluate_accuracy
from koopman_distill.koopman import load_student
from koopman_distill.models.context import CliContext
from koopman_distill.models.result import CommandResult
from koopman_distill.teacher import load_teacher
from koopman_distill.utils.output import exit_with_error
from koopman_distill.utils.serialization import STUDENT_FORMAT, TEACHER_FORMAT, sniff_format


def load_classifier(path: str) -> Tuple[Classifier, str]:
    """Load a teacher or student model file; returns (model, format tag)."""
    file_format = sniff_format(path)
    if file_format == TEACHER_FORMAT:
        return load_teacher(path), file_format
    if file_format == STUDENT_FORMAT:
        return load_student(path), file_format
    raise ModelFileError(path, f'cannot evaluate a {file_format} file')


@click.command(name='evaluate')
@click.argument('model_path', type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option('--split', type=click.Choice(['train', 'test']), default='test', show_default=True,
              help='Dataset split to evaluate on')
@json_output_option
@click.pass_obj
def evaluate_cmd(
    ctx: CliContext,
    model_path: str,
    config_file: Optional[str],
    split: str,
    output_json: Optional[bool],
) -> None:
    """Report the accuracy of a teacher or student model file

    \b
    Examples:
        koopman-distill evaluate student.json --config mnist.json
        koopman-distill evaluate teacher.json --config mnist.json --split train --json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file)
        model, file_format = load_classifier(model_path)
        features, labels = load_named_split(config, split)
        accuracy = evaluate_accuracy(model, features, labels)
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return

    data = {
        'model': model_path,
        'format': file_format,
        'split': split,
        'samples': int(labels.shape[0]),
        'accuracy': accuracy,
    }
    if json_mode:
        ctx.output(CommandResult.success_result(data), json_mode)
    else:
        ctx.console.print(f"{model_path}: {split} accuracy [bold]{accuracy:.4f}[/bold] on {data['samples']} samples")
