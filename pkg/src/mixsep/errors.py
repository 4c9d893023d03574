"""Exception types. Every class carries a stable ``tag`` used by the CLI to
emit single-line machine-parsable errors."""


class MixsepError(Exception):
    tag = "error"


class ShapeError(MixsepError):
    """Operand shapes are incompatible."""

    tag = "shape-mismatch"


class LengthError(MixsepError):
    """Input length violates an alignment or minimum-length requirement."""

    tag = "length-invalid"


class AutogradError(MixsepError):
    """Autograd contract violation (e.g. backward on a non-scalar)."""

    tag = "autograd-contract"


class ConfigError(MixsepError):
    """Bad configuration file or field value."""

    tag = "config-invalid"


class WavFormatError(MixsepError):
    """Malformed or unsupported WAV file."""

    tag = "wav-invalid"


class ArchiveError(MixsepError):
    """Corrupt or malformed tensor archive."""

    tag = "checkpoint-corrupt"


class CheckpointMismatchError(MixsepError):
    """Checkpoint tensors do not match the model being loaded."""

    tag = "checkpoint-mismatch"


class DataError(MixsepError):
    """Invalid data set or sample."""

    tag = "data-invalid"


class TrainingDivergedError(MixsepError):
    """Training produced a non-finite loss."""

    tag = "loss-nonfinite"
