"""Exception types raised across the package."""

from __future__ import annotations


class FormseekError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FormseekError, ValueError):
    pass


class NoMaximizerError(FormseekError):
    """The field has no (unique) maximizer."""


class DegenerateFormationError(FormseekError):
    """Two agents coincide or a relative position has zero length."""


class NearSingularFormationError(FormseekError):
    """The formation matrix determinant fell below the singularity floor."""

    def __init__(self, det: float, floor: float, t: float | None = None):
        self.det = det
        self.floor = floor
        self.t = t
        where = "" if t is None else f" at t={t:.6g} s"
        super().__init__(f"near-singular formation{where}: |det R|={abs(det):.3e} < floor {floor:.3e}")


class PreconditionError(FormseekError):
    """An operation was called in a state its precondition excludes."""


class AssumptionViolationError(FormseekError):
    """A standing assumption on the field or formation does not hold."""


class SimulationError(FormseekError):
    """Non-finite state or other runtime failure during integration."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message if t is None else f"{message} (t={t:.6g} s)")


class ConfigError(FormseekError):
    """Malformed or semantically invalid experiment configuration."""

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        prefix = ""
        if line is not None:
            prefix = f"line {line}: "
        elif key is not None:
            prefix = f"{key}: "
        super().__init__(prefix + message)


class CsvFormatError(FormseekError):
    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {message}")
