"""
Versioned JSON model files (teacher, student, logits).

Every file is a single JSON object with a ``format`` tag and integer
``version``. Floats are written with Python's shortest round-trip repr, so
reading a file back reproduces every float64 bit-exactly.
"""

import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Union

from koopman_distill.error_handler import ModelFileError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
TEACHER_FORMAT = 'koopman-distill/teacher'
STUDENT_FORMAT = 'koopman-distill/student'
LOGITS_FORMAT = 'koopman-distill/logits'

SCHEMA_DIR = Path(__file__).resolve().parent.parent / 'schemas'


@lru_cache(maxsize=None)
def load_schema(name: str) -> Dict[str, Any]:
    """Load a bundled JSON schema by file name."""
    with open(SCHEMA_DIR / name, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_model_file(path: Union[str, Path], file_format: str, payload: Dict[str, Any]) -> Path:
    """
    Write a tagged model file.

    Args:
        path: Destination path (parent directories are created)
        file_format: One of the *_FORMAT tags
        payload: JSON-serializable body (lists of Python floats)

    Returns:
        Resolved destination path
    """
    target = Path(path).expanduser()
    target.parent.mkdir(parents=True, exist_ok=True)
    document = {'format': file_format, 'version': FORMAT_VERSION, **payload}
    try:
        text = json.dumps(document, allow_nan=False)
    except ValueError as e:
        raise ModelFileError(str(target), 'refusing to write non-finite values', details=str(e))

    target.write_text(text, encoding='utf-8')
    logger.debug(f"Wrote {file_format} v{FORMAT_VERSION} to {target} ({len(text)} bytes)")
    return target


def read_model_file(path: Union[str, Path], expected_format: str) -> Dict[str, Any]:
    """
    Read and header-validate a tagged model file.

    Args:
        path: File to read
        expected_format: Required ``format`` tag

    Returns:
        Parsed document

    Raises:
        ModelFileError: If the file is missing, not JSON, fails the schema,
            carries another format tag, or a newer version
    """
    from jsonschema import ValidationError, validate as schema_validate

    source = Path(path).expanduser()
    try:
        with open(source, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except FileNotFoundError:
        raise ModelFileError(str(source), 'file not found')
    except json.JSONDecodeError as e:
        raise ModelFileError(
            str(source), f'invalid JSON: {e.msg} (line {e.lineno}, column {e.colno})'
        )

    try:
        schema_validate(instance=document, schema=load_schema('model_file_schema.json'))
    except ValidationError as e:
        raise ModelFileError(str(source), f'schema validation failed: {e.message}')

    if document['format'] != expected_format:
        raise ModelFileError(
            str(source),
            f"expected a {expected_format} file, found {document['format']}"
        )
    if document['version'] > FORMAT_VERSION:
        raise ModelFileError(
            str(source),
            f"file version {document['version']} is newer than supported {FORMAT_VERSION}"
        )
    return document


def sniff_format(path: Union[str, Path]) -> str:
    """Return the ``format`` tag of a model file without validating the body."""
    source = Path(path).expanduser()
    try:
        with open(source, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFileError(str(source), 'cannot read model file', details=str(e))
    if not isinstance(document, dict) or 'format' not in document:
        raise ModelFileError(str(source), 'missing format tag')
    return str(document['format'])
