"""
Experiment orchestration: multi-seed runs, evaluation and report files.

For every seed the teacher is trained (or loaded), then each requested
student method is fitted against that same teacher and evaluated on the
test split. A failing (seed, method) cell is recorded in the report and the
run continues; the report is then marked partial.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from koopman_distill.dataset import load_split, one_hot
from koopman_distill.dictionary import Dictionary, build_dictionary
from koopman_distill.distill import train_student
from koopman_distill.error_handler import ConfigError, ShapeError, create_error
from koopman_distill.koopman import LinearStudent, fit_preprocessing, naive_pca_pipeline, naive_pipeline
from koopman_distill.linalg import DenseMatrix
from koopman_distill.models.config import ExperimentConfig
from koopman_distill.models.report import CSV_COLUMNS, ExperimentReport, SeedResult
from koopman_distill.preprocess import PcaModel, Scaler, components_for_ratio, fit_pca
from koopman_distill.teacher import (
    LogitsFile,
    MlpArchitecture,
    TeacherMlp,
    import_logits,
    init_mlp,
    load_teacher,
    train_teacher,
)

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.80, 0.90, 0.95, 0.99)


class Classifier(Protocol):
    def predict_logits(self, features: ArrayLike) -> DenseMatrix:
        ...


def accuracy_from_logits(logits: ArrayLike, labels: ArrayLike) -> float:
    """
    Fraction of rows whose argmax equals the label (ties go to the lowest index).

    Raises:
        ShapeError: If row counts differ
    """
    scores = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    truth = np.asarray(labels, dtype=np.int64)
    if scores.shape[0] != truth.shape[0]:
        raise ShapeError(f'{scores.shape[0]} logit rows but {truth.shape[0]} labels')
    if truth.shape[0] == 0:
        raise ShapeError('Cannot evaluate on an empty test set')
    return float(np.count_nonzero(np.argmax(scores, axis=1) == truth)) / truth.shape[0]


def evaluate_accuracy(model: Classifier, features: ArrayLike, labels: ArrayLike) -> float:
    """Test accuracy of any model exposing predict_logits."""
    return accuracy_from_logits(model.predict_logits(features), labels)


@dataclass(frozen=True, eq=False)
class ExperimentData:
    train_features: DenseMatrix
    train_labels: NDArray[np.int64]
    test_features: DenseMatrix
    test_labels: NDArray[np.int64]


def load_experiment_data(config: ExperimentConfig) -> ExperimentData:
    """Load both dataset splits named in the config."""
    ds = config.dataset
    missing = [k for k in ('train_images', 'train_labels', 'test_images', 'test_labels') if not getattr(ds, k)]
    if missing:
        raise ConfigError(f"dataset paths not set: {', '.join(missing)}")
    train_x, train_y = load_split(ds.train_images, ds.train_labels, ds.num_classes)
    test_x, test_y = load_split(ds.test_images, ds.test_labels, ds.num_classes)
    if train_x.shape[1] != test_x.shape[1]:
        raise ShapeError(f'train images have {train_x.shape[1]} pixels, test images {test_x.shape[1]}')
    return ExperimentData(train_x, train_y, test_x, test_y)


class _Preprocessing:
    """PCA and scaler fitted on the training split only; fit once, reused by every seed."""

    def __init__(self, config: ExperimentConfig, features: DenseMatrix):
        self._config = config
        self._features = features
        self._fitted: Optional[Tuple[PcaModel, Scaler, Dictionary]] = None

    def get(self) -> Tuple[PcaModel, Scaler, Dictionary]:
        if self._fitted is None:
            self._fitted = fit_preprocessing(self._features, self._config.student)
        return self._fitted


def _timed(result: SeedResult, started: float) -> SeedResult:
    result.wall_ms = int(round((time.perf_counter() - started) * 1000))
    return result


def _record_failure(result: SeedResult, exc: BaseException) -> SeedResult:
    error = create_error(exc)
    result.error = f'{error.error_type}: {error.message}'
    logger.error(f"seed {result.seed} {result.method} failed: {error.message}")
    return result


def _teacher_for_seed(
    config: ExperimentConfig,
    data: ExperimentData,
    seed: int,
    saved_teacher: Optional[TeacherMlp],
) -> Tuple[Optional[TeacherMlp], Optional[SeedResult]]:
    """Return (teacher or None, teacher SeedResult or None)."""
    source = config.teacher.source
    started = time.perf_counter()
    if source == 'logits':
        if not config.teacher.test_logits_path:
            return None, None
        row = SeedResult(seed=seed, method='teacher')
        logits = import_logits(config.teacher.test_logits_path)
        row.accuracy = accuracy_from_logits(logits.logits, data.test_labels)
        return None, _timed(row, started)

    row = SeedResult(seed=seed, method='teacher')
    if source == 'model':
        teacher = saved_teacher
    else:
        architecture = MlpArchitecture.from_config(config.teacher)
        teacher, row.log = train_teacher(
            init_mlp(architecture, seed), data.train_features, data.train_labels, config.teacher, seed
        )
        row.epochs = config.teacher.epochs
    row.accuracy = evaluate_accuracy(teacher, data.test_features, data.test_labels)
    logger.info(f"seed {seed}: teacher test accuracy {row.accuracy:.4f}")
    return teacher, _timed(row, started)


def _run_method(
    method: str,
    seed: int,
    config: ExperimentConfig,
    data: ExperimentData,
    teacher: Optional[TeacherMlp],
    train_logits: Optional[LogitsFile],
    preprocessing: _Preprocessing,
) -> SeedResult:
    student_cfg = config.student
    result = SeedResult(seed=seed, method=method, degree=student_cfg.degree)
    started = time.perf_counter()
    try:
        student: LinearStudent
        if method == 'naive':
            if teacher is None:
                raise ConfigError("method 'naive' needs a teacher network")
            dictionary = build_dictionary(
                teacher.architecture.layer_sizes[1],
                student_cfg.degree,
                student_cfg.diagonal_only,
                student_cfg.max_terms,
            )
            student = naive_pipeline(teacher, data.train_features, dictionary, student_cfg.rcond)
        else:
            pca, scaler, dictionary = preprocessing.get()
            result.pca_dim = pca.dim
            if method == 'naive-pca':
                targets = one_hot(data.train_labels, config.dataset.num_classes)
                student = naive_pca_pipeline(
                    data.train_features, targets, pca, scaler, dictionary, student_cfg.rcond
                )
            else:
                source = teacher if teacher is not None else train_logits
                if source is None:
                    raise ConfigError('distillation needs a teacher network or a logits file')
                student, result.log = train_student(
                    data.train_features,
                    data.train_labels,
                    source,
                    pca,
                    scaler,
                    dictionary,
                    replace(config.distill, seed=seed),
                )
                result.epochs = config.distill.epochs
        result.dict_size = dictionary.size
        result.accuracy = evaluate_accuracy(student, data.test_features, data.test_labels)
        logger.info(f"seed {seed}: {method} test accuracy {result.accuracy:.4f} (M={dictionary.size})")
    except Exception as e:
        _record_failure(result, e)
    return _timed(result, started)


def run_experiment(
    config: ExperimentConfig,
    data: Optional[ExperimentData] = None,
    write_reports: bool = True,
) -> ExperimentReport:
    """
    Run every (seed, method) cell of an experiment.

    Args:
        config: Validated experiment configuration
        data: Pre-loaded splits (loaded from config paths when None)
        write_reports: Write the CSV and JSON reports to config.output

    Returns:
        ExperimentReport with per-seed rows and per-method summaries
    """
    config.validate()
    run_started = time.perf_counter()
    report = ExperimentReport(
        config=config.to_dict(),
        started_at=datetime.now(timezone.utc).isoformat(timespec='seconds'),
    )
    data = data or load_experiment_data(config)

    saved_teacher = load_teacher(config.teacher.model_path) if config.teacher.source == 'model' else None
    train_logits = import_logits(config.teacher.logits_path) if config.teacher.source == 'logits' else None
    preprocessing = _Preprocessing(config, data.train_features)

    for seed in config.seeds:
        try:
            teacher, teacher_row = _teacher_for_seed(config, data, seed, saved_teacher)
        except Exception as e:
            row = _record_failure(SeedResult(seed=seed, method='teacher'), e)
            report.results.append(row)
            for method in config.methods:
                report.results.append(SeedResult(
                    seed=seed, method=method, degree=config.student.degree,
                    error=f'teacher unavailable: {row.error}',
                ))
            continue
        if teacher_row is not None:
            report.results.append(teacher_row)
        for method in config.methods:
            report.results.append(
                _run_method(method, seed, config, data, teacher, train_logits, preprocessing)
            )

    report.wall_ms = int(round((time.perf_counter() - run_started) * 1000))
    if write_reports:
        out_dir = Path(config.output.dir)
        write_csv(report, out_dir / config.output.csv)
        write_json(report, out_dir / config.output.json)
    return report


def write_csv(report: ExperimentReport, path: Union[str, Path]) -> Path:
    """Write one row per (seed, method) with the fixed column order."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=list(CSV_COLUMNS), lineterminator='\n')
        writer.writeheader()
        for result in report.results:
            writer.writerow(result.to_row())
    logger.info(f"Wrote {len(report.results)} rows to {target}")
    return target


def write_json(report: ExperimentReport, path: Union[str, Path]) -> Path:
    """Write the full report, including per-epoch logs and the config echo."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(report.to_dict(), indent=2, default=str), encoding='utf-8')
    return target


def pca_report(
    features: DenseMatrix,
    max_dim: Optional[int] = None,
    ratios: Sequence[float] = DEFAULT_RATIOS,
) -> Dict[str, Any]:
    """
    Explained-variance table and the component count needed per ratio.

    Returns:
        Dict with 'components' rows (index, singular_value, ratio, cumulative)
        and 'required' mapping each ratio to its D (max_dim + 1 if unreached)
    """
    limit = min(features.shape)
    model: PcaModel = fit_pca(features, min(max_dim or limit, limit))
    cumulative = model.cumulative_ratio
    return {
        'samples': int(features.shape[0]),
        'features': int(features.shape[1]),
        'components': [
            {
                'component': i + 1,
                'singular_value': float(model.singular_values[i]),
                'ratio': float(model.explained_ratio[i]),
                'cumulative': float(cumulative[i]),
            }
            for i in range(model.dim)
        ],
        'required': {f'{r:g}': components_for_ratio(model, r) for r in ratios},
    }

