"""
Exception hierarchy shared by every component.

Library code raises these; `exterior_hessian.runner` turns them into status dicts and
`main.py` turns status dicts into exit codes.
"""
from typing import Any, Dict, Optional


class HessianError(Exception):
    """Base class for all errors raised by exterior_hessian"""


class DomainError(HessianError, ValueError):
    """Argument outside the mathematical domain of an operation"""


class PreconditionError(HessianError, ValueError):
    """A documented precondition does not hold"""


class ConfigurationError(HessianError, ValueError):
    """Invalid run configuration; `field` names the offending entry"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class NumericalError(HessianError, ArithmeticError):
    """Numerical failure with diagnostics attached"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class ConvergenceError(NumericalError):
    """Newton or continuation did not converge; carries the partial report"""

    def __init__(self, message: str, report: Any = None,
                 diagnostics: Optional[Dict[str, Any]] = None):
        self.report = report
        super().__init__(message, diagnostics)


class InsufficientSpanError(PreconditionError):
    """Radial span too short for a decay fit"""


class CheckpointError(HessianError, OSError):
    """Checkpoint missing, unreadable or incompatible"""
