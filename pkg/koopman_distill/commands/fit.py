"""
Student commands: least-squares fits and distillation
"""

from dataclasses import replace
from typing import Any, Dict, Optional

import click

from koopman_distill.commands import has_split, load_named_split
from koopman_distill.config import load_config
from koopman_distill.dataset import one_hot
from koopman_distill.decorators import config_option, json_output_option, seed_option, student_options
from koopman_distill.dictionary import build_dictionary
from koopman_distill.distill import train_student
from koopman_distill.error_handler import ConfigError, KoopmanDistillError
from koopman_distill.harness import evaluate_accuracy
from koopman_distill.koopman import LinearStudent, fit_preprocessing, naive_pca_pipeline, naive_pipeline, save_student
from koopman_distill.models.config import ExperimentConfig
from koopman_distill.models.context import CliContext
from koopman_distill.models.result import CommandResult
from koopman_distill.teacher import import_logits, load_teacher
from koopman_distill.utils.output import exit_with_error, format_table


def _summary(student: LinearStudent, config: ExperimentConfig, out_path: str) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        'model': out_path,
        'kind': student.kind,
        'pca_dim': None if student.pca is None else student.pca.dim,
        'degree': student.dictionary.max_degree,
        'dict_size': student.dictionary.size,
    }
    if has_split(config, 'test'):
        test_x, test_y = load_named_split(config, 'test')
        data['test_accuracy'] = evaluate_accuracy(student, test_x, test_y)
    return data


def _report(ctx: CliContext, data: Dict[str, Any], json_mode: bool) -> None:
    if json_mode:
        ctx.output(CommandResult.success_result(data), json_mode)
        return
    ctx.console.print(
        f"[green]✓[/green] {data['kind']} student: M={data['dict_size']} terms, saved to {data['model']}"
    )
    if 'test_accuracy' in data:
        ctx.console.print(f"Test accuracy: [bold]{data['test_accuracy']:.4f}[/bold]")


@click.command(name='fit-naive')
@click.argument('teacher_path', type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option('--degree', type=click.IntRange(min=0), help='Maximum monomial degree d')
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='Student model file to write')
@json_output_option
@click.pass_obj
def fit_naive_cmd(
    ctx: CliContext,
    teacher_path: str,
    config_file: Optional[str],
    degree: Optional[int],
    out_path: str,
    output_json: Optional[bool],
) -> None:
    """Replace the teacher's hidden layers by one least-squares Koopman matrix

    \b
    Examples:
        koopman-distill fit-naive teacher.json --config mnist.json --degree 2 --out naive.json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file, degree=degree)
        teacher = load_teacher(teacher_path)
        features, _ = load_named_split(config, 'train')
        student_cfg = config.student
        dictionary = build_dictionary(
            teacher.architecture.layer_sizes[1], student_cfg.degree,
            student_cfg.diagonal_only, student_cfg.max_terms,
        )
        student = naive_pipeline(teacher, features, dictionary, student_cfg.rcond)
        save_student(student, out_path)
        data = _summary(student, config, out_path)
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return
    _report(ctx, data, json_mode)


@click.command(name='fit-naive-pca')
@config_option
@student_options
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='Student model file to write')
@json_output_option
@click.pass_obj
def fit_naive_pca_cmd(
    ctx: CliContext,
    config_file: Optional[str],
    pca_dim: Optional[int],
    degree: Optional[int],
    out_path: str,
    output_json: Optional[bool],
) -> None:
    """Least-squares fit from PCA features to one-hot labels

    \b
    Examples:
        koopman-distill fit-naive-pca --config mnist.json --pca-dim 20 --degree 2 --out naive-pca.json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file, pca_dim=pca_dim, degree=degree)
        features, labels = load_named_split(config, 'train')
        pca, scaler, dictionary = fit_preprocessing(features, config.student)
        student = naive_pca_pipeline(
            features, one_hot(labels, config.dataset.num_classes),
            pca, scaler, dictionary, config.student.rcond,
        )
        save_student(student, out_path)
        data = _summary(student, config, out_path)
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return
    _report(ctx, data, json_mode)


@click.command(name='distill')
@config_option
@student_options
@seed_option()
@click.option('--teacher', 'teacher_path', type=click.Path(exists=True, dir_okay=False),
              help='Saved teacher model (default: teacher.model_path)')
@click.option('--logits', 'logits_path', type=click.Path(exists=True, dir_okay=False),
              help='Teacher logits file for the training split (default: teacher.logits_path)')
@click.option('--alpha', type=click.FloatRange(0.0, 1.0), help='Override distill.alpha')
@click.option('--temperature', type=click.FloatRange(min=0.0, min_open=True), help='Override distill.temperature')
@click.option('--epochs', type=click.IntRange(min=0), help='Override distill.epochs')
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='Student model file to write')
@json_output_option
@click.pass_obj
def distill_cmd(
    ctx: CliContext,
    config_file: Optional[str],
    pca_dim: Optional[int],
    degree: Optional[int],
    seed: Optional[int],
    teacher_path: Optional[str],
    logits_path: Optional[str],
    alpha: Optional[float],
    temperature: Optional[float],
    epochs: Optional[int],
    out_path: str,
    output_json: Optional[bool],
) -> None:
    """Train K by knowledge distillation from a teacher or its logits

    \b
    Examples:
        koopman-distill distill --config mnist.json --teacher teacher.json --out student.json
        koopman-distill distill --config fashion.json --logits resnet-train-logits.json --out student.json
    """
    json_mode = ctx.resolve_json(output_json)
    try:
        config = load_config(config_file, pca_dim=pca_dim, degree=degree)
        overrides = {k: v for k, v in (('alpha', alpha), ('temperature', temperature), ('epochs', epochs))
                     if v is not None}
        run_seed = seed if seed is not None else config.seeds[0]
        distill_cfg = replace(config.distill, seed=run_seed, **overrides)
        distill_cfg.validate()

        teacher_file = teacher_path or (None if logits_path else config.teacher.model_path)
        logits_file = logits_path or config.teacher.logits_path
        if teacher_file:
            source = load_teacher(teacher_file)
        elif logits_file:
            source = import_logits(logits_file)
        else:
            raise ConfigError(
                "No teacher given",
                suggestion="Pass --teacher MODEL or --logits FILE (or set teacher.model_path / teacher.logits_path)"
            )

        features, labels = load_named_split(config, 'train')
        pca, scaler, dictionary = fit_preprocessing(features, config.student)
        student, logs = train_student(features, labels, source, pca, scaler, dictionary, distill_cfg)
        save_student(student, out_path)
        data = _summary(student, config, out_path)
        data['seed'] = run_seed
        data['epochs'] = [entry.to_dict() for entry in logs]
    except KoopmanDistillError as e:
        exit_with_error(e, ctx.console, json_mode)
        return

    if not json_mode and data['epochs']:
        format_table(data['epochs'], title=f'Distillation (seed {run_seed})', console=ctx.console)
    _report(ctx, data, json_mode)
