"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, any
:class:`ZsfuseError` exits 2, raw I/O failures exit 3.
"""


class ZsfuseError(Exception):
    """Base class for all engine errors."""


class FormatError(ZsfuseError):
    """File does not look like a ZSEB matrix (bad magic, version, flags)."""


class CorruptionError(ZsfuseError):
    """File is structurally ZSEB but damaged (truncation, CRC mismatch)."""


class ValidationError(ZsfuseError):
    """Data violates a documented invariant."""


class DegenerateRowError(ValidationError):
    """A row has (near-)zero norm, making cosine undefined."""

    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"row {row} has near-zero L2 norm")


class ConfigError(ZsfuseError):
    """A configuration value or manifest entry is inconsistent."""


class EmptyEvaluationError(ZsfuseError):
    """No samples were eligible for the requested metric."""
