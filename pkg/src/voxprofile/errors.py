"""Exception types shared across the package."""


class VoxProfileError(Exception):
    """Base class for all package errors."""


class ShapeError(VoxProfileError):
    """Array dimensions do not match an operation's contract."""


class ConfigError(VoxProfileError):
    """Invalid configuration value or file."""


class DomainError(VoxProfileError):
    """Argument outside an operation's mathematical domain."""


class NumericError(VoxProfileError):
    """A value that must be finite is NaN or infinite."""


class ContractError(VoxProfileError):
    """A caller broke an API precondition (stale cache, untrained model)."""


class TrainingError(VoxProfileError):
    """Training failed (non-finite loss, quality floor not reached)."""


class MiningError(VoxProfileError):
    """Triplet mining is impossible for the given corpus."""


class SpeakerLookupError(VoxProfileError):
    """Speaker id has no row in the baseline lookup table."""


class NormalizationError(VoxProfileError):
    """Report normalization against a zero baseline cell."""


class EvaluationError(VoxProfileError):
    """Metric evaluation could not produce a finite result."""
