"""Utility modules for koopman-distill."""

from .output import (
    format_table,
    output_error,
    exit_with_error
)

from .serialization import (
    read_model_file,
    write_model_file,
    sniff_format
)

__all__ = [
    'format_table',
    'output_error',
    'exit_with_error',
    'read_model_file',
    'write_model_file',
    'sniff_format'
]
