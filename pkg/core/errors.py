"""core.errors

Standardized error types for tensors, configuration, datasets and runs.

Every error carries an ``exit_code`` so the CLI can map failures onto the
documented process exit codes (config 2, IO 3, numeric 4).
"""

from typing import Optional, Sequence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class ToporeuseError(Exception):
    """Base error for all toporeuse failures."""

    exit_code: int = 1

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class DimensionError(ToporeuseError):
    """Operand shapes are incompatible."""

    exit_code = EXIT_NUMERIC

    def __init__(self, op: str, *shapes: Sequence[int]):
        """Initialize dimension error.

        Args:
            op: Name of the failing operation
            shapes: Offending operand shapes
        """
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        rendered = " vs ".join(str(list(s)) for s in self.shapes)
        super().__init__(f"[{op}] incompatible shapes {rendered}")


class NonFiniteError(ToporeuseError):
    """An operation produced NaN or Inf while checked mode was active."""

    exit_code = EXIT_NUMERIC

    def __init__(self, op: str):
        self.op = op
        super().__init__(f"[{op}] produced non-finite values")


class MetricRangeError(ToporeuseError):
    """A metric component fell outside [0, 1]."""

    exit_code = EXIT_NUMERIC

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"Metric component '{name}'={value!r} outside [0, 1]")


class ConfigError(ToporeuseError):
    """Invalid run, model or generator configuration."""

    exit_code = EXIT_CONFIG

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class InfeasibleSceneError(ConfigError):
    """Scene generator bounds cannot be satisfied."""

    def __init__(self, reason: str):
        super().__init__(f"Infeasible scene configuration: {reason}", key="scene")


class DatasetError(ToporeuseError):
    """Dataset file could not be read or written."""

    exit_code = EXIT_IO

    def __init__(self, path: str, message: str):
        self.path = str(path)
        super().__init__(f"[{path}] {message}")


class CorruptDatasetError(DatasetError):
    """Dataset file is truncated or malformed."""

    def __init__(self, path: str, detail: str = ""):
        msg = "Corrupt dataset file"
        if detail:
            msg += f": {detail}"
        super().__init__(path, msg)


class DatasetVersionError(DatasetError):
    """Dataset header declares an unsupported version."""

    def __init__(self, path: str, found, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(path, f"Unsupported dataset version {found!r} (expected {expected})")


class CheckpointError(ToporeuseError):
    """Checkpoint missing, corrupt or incompatible with the requested run."""

    exit_code = EXIT_IO

    def __init__(self, path: Optional[str], message: str):
        self.path = str(path) if path is not None else None
        prefix = f"[{path}] " if path is not None else ""
        super().__init__(f"{prefix}{message}")


def exit_code_for(exc: BaseException) -> int:
    """Return the documented process exit code for an exception."""
    if isinstance(exc, ToporeuseError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return EXIT_IO
    return 1
