"""
Error hierarchy for koopman-distill.

Provides categorized exceptions, regex-based analysis of raw numpy / IO
messages, and the JSON error envelope used by the CLI.
"""

from typing import Optional, Dict, Any, Tuple
import re


class KoopmanDistillError(Exception):
    """Base exception for all koopman-distill failures"""

    exit_code = 3

    def __init__(
        self,
        message: str,
        error_type: str = 'unknown',
        details: Optional[str] = None,
        suggestion: Optional[str] = None,
    ):
        self.message = message
        self.error_type = error_type
        self.details = details
        self.suggestion = suggestion
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dict for JSON output"""
        result = {
            'success': False,
            'error': self.message,
            'error_type': self.error_type
        }
        if self.details:
            result['details'] = self.details
        if self.suggestion:
            result['suggestion'] = self.suggestion
        return result


class ConfigError(KoopmanDistillError):
    """Invalid or incomplete experiment configuration"""

    exit_code = 2

    def __init__(self, message: str, details: Optional[str] = None,
                 suggestion: Optional[str] = None):
        super().__init__(
            message,
            error_type='config',
            details=details,
            suggestion=suggestion or 'Check the --config file and KOOPMAN_DISTILL_* variables'
        )


class ShapeError(KoopmanDistillError):
    """Dimension mismatch between operands"""

    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(
            message,
            error_type='shape',
            details=details,
            suggestion='Check that feature, label and model dimensions agree'
        )


class NonFiniteError(KoopmanDistillError):
    """A matrix contains NaN or Inf entries"""

    exit_code = 4

    def __init__(self, name: str, count: int):
        super().__init__(
            f'{name} contains {count} non-finite entries',
            error_type='numerical',
            suggestion='Check input scaling; NaN/Inf must not reach linear algebra'
        )
        self.name = name
        self.count = count


class IdxParseError(KoopmanDistillError):
    """Base class for IDX file parse failures"""

    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(
            message,
            error_type='idx',
            details=details,
            suggestion='Check the file is an uncompressed or gzipped IDX file'
        )


class IdxMagicError(IdxParseError):
    """IDX header magic does not match the expected file kind"""


class IdxTruncatedError(IdxParseError):
    """IDX payload is shorter than its header announces"""


class IdxDimensionError(IdxParseError):
    """IDX dimensions are zero-sized or overflow the payload size cap"""


class LabelRangeError(KoopmanDistillError):
    """A label index is outside 0..C-1"""

    def __init__(self, label: int, num_classes: int):
        super().__init__(
            f'Label {label} out of range for {num_classes} classes',
            error_type='label',
            suggestion='Check num_classes in the dataset config'
        )
        self.label = label
        self.num_classes = num_classes


class PcaError(KoopmanDistillError):
    """PCA target dimension out of range or degenerate data"""

    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(
            message,
            error_type='pca',
            details=details,
            suggestion='Choose 1 <= pca_dim <= min(samples, features) on non-constant data'
        )


class DictionaryOverflowError(KoopmanDistillError):
    """Monomial count exceeds the configured cap"""

    def __init__(self, size: int, cap: int):
        super().__init__(
            f'Dictionary would contain {size} terms (cap {cap})',
            error_type='dictionary',
            suggestion='Lower the degree or pca_dim, or raise student.max_terms'
        )
        self.size = size
        self.cap = cap


class ConvergenceError(KoopmanDistillError):
    """SVD did not converge"""

    exit_code = 4

    def __init__(self, message: str = 'SVD did not converge', details: Optional[str] = None):
        super().__init__(
            message,
            error_type='numerical',
            details=details,
            suggestion='Inspect the input matrix for extreme values'
        )


class DivergenceError(KoopmanDistillError):
    """Training loss became NaN or infinite"""

    exit_code = 4

    def __init__(self, epoch: int, batch: int, details: Optional[str] = None):
        super().__init__(
            f'Loss diverged at epoch {epoch}, batch {batch}',
            error_type='numerical',
            details=details,
            suggestion='Lower the learning-rate multiplier or check input scaling'
        )
        self.epoch = epoch
        self.batch = batch


class ModelFileError(KoopmanDistillError):
    """Malformed, unsupported or mismatched model / logits file"""

    def __init__(self, path: str, message: str, details: Optional[str] = None):
        super().__init__(
            f'{path}: {message}',
            error_type='model_file',
            details=details,
            suggestion='Regenerate the file with the matching koopman-distill command'
        )
        self.path = path


class LogitsMismatchError(KoopmanDistillError):
    """Teacher logits do not line up with the training set"""

    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(
            message,
            error_type='logits',
            details=details,
            suggestion='Export logits for the same training split the student uses'
        )


class ErrorAnalyzer:
    """Analyzes raw exception messages and provides suggestions"""

    ERROR_PATTERNS = {
        r'SVD did not converge': {
            'type': 'numerical',
            'message': 'Singular value decomposition failed to converge',
            'suggestion': 'Inspect the input matrix for NaN/Inf or extreme values'
        },
        r'[Ss]ingular matrix': {
            'type': 'numerical',
            'message': 'Matrix is singular',
            'suggestion': 'Raise rcond so small singular values are dropped'
        },
        r'shapes? .* not aligned|matmul: Input operand|could not be broadcast': {
            'type': 'shape',
            'message': 'Matrix dimensions do not agree',
            'suggestion': 'Check pca_dim / degree against the saved model'
        },
        r'[Uu]nable to allocate|MemoryError': {
            'type': 'memory',
            'message': 'Out of memory',
            'suggestion': 'Lower the dictionary degree or pca_dim'
        },
        r'No such file or directory': {
            'type': 'config',
            'message': 'File not found',
            'suggestion': 'Check dataset and model paths (KOOPMAN_DISTILL_DATA_DIR)'
        },
        r'Not a gzipped file|[Cc]ompressed file ended': {
            'type': 'idx',
            'message': 'Corrupt gzip stream',
            'suggestion': 'Re-download or decompress the IDX file'
        },
        r'Expecting value|JSONDecodeError': {
            'type': 'model_file',
            'message': 'File is not valid JSON',
            'suggestion': 'Regenerate the file with the matching koopman-distill command'
        },
    }

    @classmethod
    def analyze(cls, error_message: str) -> Tuple[str, str, Optional[str]]:
        """
        Analyze error message and return categorized error info.

        Args:
            error_message: Raw exception text

        Returns:
            Tuple of (error_type, message, suggestion)
        """
        for pattern, info in cls.ERROR_PATTERNS.items():
            if re.search(pattern, error_message, re.IGNORECASE):
                return (
                    info.get('type', 'unknown'),
                    info.get('message', error_message),
                    info.get('suggestion')
                )

        return ('unknown', error_message, None)


def create_error(exc: BaseException) -> KoopmanDistillError:
    """
    Wrap an arbitrary exception into the koopman-distill hierarchy.

    Args:
        exc: Exception raised somewhere below the CLI

    Returns:
        The exception itself if already categorized, else a KoopmanDistillError
    """
    if isinstance(exc, KoopmanDistillError):
        return exc

    error_type, message, suggestion = ErrorAnalyzer.analyze(str(exc))
    if error_type == 'config':
        return ConfigError(message, details=str(exc), suggestion=suggestion)
    if error_type == 'numerical':
        return ConvergenceError(message, details=str(exc))
    return KoopmanDistillError(
        message,
        error_type=error_type,
        details=str(exc) if message != str(exc) else None,
        suggestion=suggestion
    )
