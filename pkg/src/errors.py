"""
Exception hierarchy for hgpcc.

Every error carries an ``exit_code`` so the CLI can map an error class to a
process status without inspecting messages.
"""

from typing import Optional


class HgpError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class ConfigError(HgpError):
    """Experiment configuration could not be parsed or is invalid."""

    exit_code = 2

    def __init__(self, message: str, issues: Optional[list[str]] = None):
        super().__init__(message)
        self.issues = issues or []


class DatasetError(HgpError, ValueError):
    """Replicated observations violate a dataset invariant."""

    exit_code = 3


class KernelError(HgpError, ValueError):
    """Kernel parameters or inputs are inconsistent."""

    exit_code = 4


class NotPositiveDefiniteError(KernelError):
    """Cholesky factorization broke down."""

    def __init__(self, pivot: int, message: Optional[str] = None):
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class SpecialFunctionDomainError(HgpError, ValueError):
    """Argument outside the domain of a special function."""

    exit_code = 4


class InferenceError(HgpError):
    """Posterior computation failed."""

    exit_code = 5


class ConsistencyError(InferenceError):
    """Two algebraically identical computations disagreed."""


class BracketingError(InferenceError):
    """Root bracket for a CDF level could not be found."""
