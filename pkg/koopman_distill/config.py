"""
Configuration loading for koopman-distill
Handles .env files, environment variables, and JSON/YAML experiment files

Config Priority Order (highest to lowest):
1. Command-line arguments (--seed, --pca-dim, --degree, --method, --out)
2. Environment variables / .env files (KOOPMAN_DISTILL_OUTPUT_DIR, KOOPMAN_DISTILL_SEEDS)
3. Config file via --config or KOOPMAN_DISTILL_CONFIG (JSON or YAML)
4. Built-in defaults (the published MNIST protocol)

.env File Search Order:
1. KOOPMAN_DISTILL_ENV environment variable (explicit path)
2. .env in current directory
3. .env in parent directories (up to 5 levels, like Git)
4. $XDG_CONFIG_HOME/koopman-distill/.env

Relative dataset and model paths resolve against KOOPMAN_DISTILL_DATA_DIR
when it is set, otherwise against the directory of the config file.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml
from dotenv import load_dotenv

from koopman_distill.error_handler import ConfigError
from koopman_distill.models.config import ExperimentConfig
from koopman_distill.utils.serialization import load_schema

# Maximum levels to search up for .env files
MAX_PARENT_SEARCH_LEVELS = 5

ENV_PREFIX = 'KOOPMAN_DISTILL_'
DATASET_PATH_KEYS = ('train_images', 'train_labels', 'test_images', 'test_labels')
TEACHER_PATH_KEYS = ('model_path', 'logits_path', 'test_logits_path')


def find_env_file(start_dir: Optional[Path] = None) -> Optional[Path]:
    """
    Find .env file by searching current directory and parent directories.

    Args:
        start_dir: Directory to start searching from (default: current working directory)

    Returns:
        Path to .env file if found, None otherwise
    """
    current = (start_dir or Path.cwd()).resolve()

    for _ in range(MAX_PARENT_SEARCH_LEVELS + 1):
        env_file = current / '.env'
        if env_file.exists():
            return env_file

        parent = current.parent
        if parent == current:  # Reached root
            break
        current = parent

    return None


def get_env_search_paths() -> List[Path]:
    """
    Get list of .env paths to search, in priority order.
    """
    paths = []

    explicit = os.getenv(f'{ENV_PREFIX}ENV')
    if explicit:
        paths.append(Path(explicit).expanduser())

    paths.append(Path.cwd() / '.env')

    parent_env = find_env_file()
    if parent_env and parent_env not in paths:
        paths.append(parent_env)

    xdg_config = os.getenv('XDG_CONFIG_HOME', str(Path.home() / '.config'))
    paths.append(Path(xdg_config) / 'koopman-distill' / '.env')

    return paths


def load_env_files() -> Optional[Path]:
    """Load every existing .env file without overriding the shell; return the first one."""
    first = None
    for env_path in get_env_search_paths():
        if env_path.exists():
            load_dotenv(env_path, override=False)
            first = first or env_path
    return first


def read_config_file(path: Path) -> Dict[str, Any]:
    """
    Read an experiment file; ``.yaml``/``.yml`` via yaml.safe_load, otherwise JSON.

    Raises:
        ConfigError: If the file is missing or cannot be parsed
    """
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            if path.suffix.lower() in ('.yaml', '.yml'):
                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot parse config file {path}", details=str(e))
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping at the top level")
    return data


def json_mode_from_env() -> bool:
    """True when KOOPMAN_DISTILL_JSON is 1, true or yes (any case)."""
    return os.getenv(f'{ENV_PREFIX}JSON', '').strip().lower() in ('1', 'true', 'yes')


def parse_seed_list(value: str) -> List[int]:
    """Parse '1,2,3' or '0-4' (inclusive range) into a list of seeds."""
    seeds: List[int] = []
    try:
        for part in value.split(','):
            part = part.strip()
            if not part:
                continue
            if '-' in part:
                low, high = part.split('-', 1)
                seeds.extend(range(int(low), int(high) + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise ConfigError(f"Invalid seed list {value!r}", suggestion="Use e.g. 1,2,3 or 0-9")
    return seeds


def validate_schema(data: Dict[str, Any]) -> None:
    """
    Validate a raw experiment mapping against experiment_schema.json.

    Raises:
        ConfigError: With the failing key path in the message
    """
    from jsonschema import ValidationError, validate as schema_validate

    try:
        schema_validate(instance=data, schema=load_schema('experiment_schema.json'))
    except ValidationError as e:
        location = '.'.join(str(p) for p in e.absolute_path) or '<root>'
        raise ConfigError(f"Invalid config at {location}: {e.message}")


def _resolve(value: Optional[str], base: Optional[Path]) -> Optional[str]:
    if not value:
        return value
    path = Path(value).expanduser()
    if not path.is_absolute() and base is not None:
        path = base / path
    return str(path)


def load_config(
    config_file: Optional[str] = None,
    seeds: Optional[Sequence[int]] = None,
    pca_dim: Optional[int] = None,
    degree: Optional[int] = None,
    methods: Optional[Sequence[str]] = None,
    out: Optional[str] = None,
) -> ExperimentConfig:
    """
    Load an experiment configuration from every source, highest priority last.

    Args:
        config_file: Experiment file (falls back to KOOPMAN_DISTILL_CONFIG)
        seeds: Override seed list
        pca_dim: Override student.pca_dim
        degree: Override student.degree
        methods: Override method list
        out: Override output directory

    Returns:
        Validated ExperimentConfig with absolute data paths

    Raises:
        ConfigError: On unreadable files, schema violations or bad values
    """
    load_env_files()

    data: Dict[str, Any] = {}
    config_dir: Optional[Path] = None
    source = config_file or os.getenv(f'{ENV_PREFIX}CONFIG')
    if source:
        config_path = Path(source).expanduser().resolve()
        data = read_config_file(config_path)
        config_dir = config_path.parent

    validate_schema(data)

    env_output = os.getenv(f'{ENV_PREFIX}OUTPUT_DIR')
    if env_output:
        data.setdefault('output', {})['dir'] = env_output
    env_seeds = os.getenv(f'{ENV_PREFIX}SEEDS')
    if env_seeds:
        data['seeds'] = parse_seed_list(env_seeds)

    if seeds:
        data['seeds'] = list(seeds)
    if pca_dim is not None:
        data.setdefault('student', {})['pca_dim'] = pca_dim
    if degree is not None:
        data.setdefault('student', {})['degree'] = degree
    if methods:
        data['methods'] = list(methods)
    if out is not None:
        data.setdefault('output', {})['dir'] = out

    env_data_dir = os.getenv(f'{ENV_PREFIX}DATA_DIR')
    base = Path(env_data_dir).expanduser() if env_data_dir else config_dir
    for key in DATASET_PATH_KEYS:
        section = data.get('dataset', {})
        if key in section:
            section[key] = _resolve(section[key], base)
    for key in TEACHER_PATH_KEYS:
        section = data.get('teacher', {})
        if key in section:
            section[key] = _resolve(section[key], base)

    try:
        config = ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ConfigError("Invalid config values", details=str(e))
    config.validate()
    return config


def validate_config(config: ExperimentConfig, require_dataset: bool = True) -> None:
    """
    Check the run-start invariants: referenced files exist and seeds are set.

    Raises:
        ConfigError: Listing every missing file
    """
    if not config.seeds:
        raise ConfigError("seeds must not be empty")

    required = []
    if require_dataset:
        for key in DATASET_PATH_KEYS:
            value = getattr(config.dataset, key)
            if not value:
                raise ConfigError(
                    f"dataset.{key} is not set",
                    suggestion=f"Set it in the config file or via {ENV_PREFIX}DATA_DIR-relative paths"
                )
            required.append((f'dataset.{key}', value))
    teacher = config.teacher
    if teacher.source == 'model':
        required.append(('teacher.model_path', teacher.model_path))
    if teacher.source == 'logits':
        required.append(('teacher.logits_path', teacher.logits_path))
    if teacher.test_logits_path:
        required.append(('teacher.test_logits_path', teacher.test_logits_path))

    missing = [f'{name}: {path}' for name, path in required if not path or not Path(path).exists()]
    if missing:
        raise ConfigError(
            "Referenced files do not exist",
            details='\n'.join(missing),
            suggestion=f"Check paths or set {ENV_PREFIX}DATA_DIR"
        )

