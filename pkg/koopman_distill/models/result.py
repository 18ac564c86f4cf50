"""
Command result model for standardized output
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, Optional

from koopman_distill.error_handler import KoopmanDistillError


@dataclass
class CommandResult:
    """Standardized output for all CLI commands"""

    success: bool
    data: Any = None
    error: Optional[str] = None
    error_type: Optional[str] = None
    suggestion: Optional[str] = None
    details: Optional[str] = None
    exit_code: int = 0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the JSON envelope"""
        result: Dict[str, Any] = {'success': self.success}

        if self.success:
            result['data'] = self.data
        else:
            result['error'] = self.error or 'Unknown error'
            result['error_type'] = self.error_type or 'unknown'
            if self.details:
                result['details'] = self.details
            if self.suggestion:
                result['suggestion'] = self.suggestion

        return result

    def to_json(self) -> str:
        """Convert to JSON string for output"""
        return json.dumps(self.to_dict(), indent=2, default=str)

    @classmethod
    def success_result(cls, data: Any) -> 'CommandResult':
        """Create a success result"""
        return cls(success=True, data=data)

    @classmethod
    def from_error(cls, error: KoopmanDistillError) -> 'CommandResult':
        """Create an error result carrying the error's exit code"""
        return cls(
            success=False,
            error=error.message,
            error_type=error.error_type,
            details=error.details,
            suggestion=error.suggestion,
            exit_code=error.exit_code
        )

    def get_exit_code(self) -> int:
        """0 on success, otherwise the code of the originating error"""
        if self.success:
            return 0
        return self.exit_code or 3
