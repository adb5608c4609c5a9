"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code so shell callers can branch on the
failure kind: config/input errors exit 2, missing prerequisite artifacts
exit 3, numeric failures exit 4.
"""


class EluGcnError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(EluGcnError):
    """Invalid configuration value or malformed input file."""

    exit_code = 2


class DatasetFormatError(ConfigError):
    """Malformed dataset file; carries the offending file and line."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class MissingArtifactError(EluGcnError):
    """A required input artifact does not exist yet."""

    exit_code = 3

    def __init__(self, path, hint=None):
        msg = f"missing artifact: {path}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
        self.path = str(path)
        self.hint = hint


class NumericError(EluGcnError):
    """Numerical failure (divergence, non-finite values, ...)."""

    exit_code = 4


class SingularMatrixError(NumericError):
    """Matrix is singular to working tolerance."""
