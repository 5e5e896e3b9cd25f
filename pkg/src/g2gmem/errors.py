"""Shared exception types."""


class ShapeError(ValueError):
    """Operand shapes do not satisfy an operation's contract."""


class NumericError(ValueError):
    """Non-finite values where finite ones are required."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class FormatError(ValueError):
    """Malformed binary file (bad magic, version, or truncation)."""


class GradientCheckError(RuntimeError):
    """Gradient verification could not be carried out."""


class ProtocolError(RuntimeError):
    """Session protocol violation (class overlap, empty memory, ...)."""


class StageError(RuntimeError):
    """Failure inside a named stage of the feature-to-interaction chain."""

