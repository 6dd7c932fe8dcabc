"""Exception types shared across the package."""

from __future__ import annotations


class MultiEndpointError(Exception):
    """Base class for all package-specific errors."""


class SchemaMismatchError(MultiEndpointError):
    """A column named in the mapping is absent from the CSV header."""


class CsvParseError(MultiEndpointError):
    """A required field in a data row could not be parsed."""

    def __init__(self, row: int, column: str, detail: str = ""):
        self.row = row
        self.column = column
        msg = f"row {row}, column {column!r}: malformed value"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EmptyGroupError(MultiEndpointError):
    """A treatment or control group ended up with zero subjects."""


class MissingColumnError(MultiEndpointError):
    """A derivation input (endpoint or covariate) is absent from the dataset."""


class InvalidContrastError(MultiEndpointError):
    """A contrast names an arm that does not exist, or is malformed."""


class HierarchyMismatchError(MultiEndpointError):
    """A subject or dataset lacks an endpoint named in the hierarchy."""


class EmptyAfterExclusionError(MultiEndpointError):
    """Complete-case filtering removed every subject."""


class ExactTooLargeError(MultiEndpointError):
    """Exact enumeration was requested but C(N, n1) exceeds the cap."""


class KernelKindMismatchError(MultiEndpointError):
    """A kernel was applied to an endpoint kind it does not support."""


class InvalidCorrelationError(MultiEndpointError):
    """A correlation matrix is not symmetric/PSD with unit diagonal."""


class ConfigError(MultiEndpointError):
    """A run configuration failed validation; message carries the field path."""
