"""
Exception types shared by the toolbox. Each carries the CLI exit code it maps to.
"""


class CciError(Exception):
    """Base class for toolbox errors."""

    exit_code = 1


class InputError(CciError, ValueError):
    """Malformed input: bad vertex ids, overlapping query sets, unreadable files."""

    exit_code = 2


class GenerationError(CciError, RuntimeError):
    """Random system generation could not satisfy its acceptance checks."""


class NumericError(CciError, ArithmeticError):
    """Singular or ill-conditioned matrix where an inverse is required."""


class DegenerateSelectionError(CciError):
    """Selection filtering retained no samples."""


class OrientationConflictError(CciError):
    """An orientation tried to overwrite an existing non-circle mark with a different one."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
