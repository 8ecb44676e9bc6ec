"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericError -> 3.
"""


class SplatarError(Exception):
    """Base class for all engine errors."""


class UsageError(SplatarError):
    """Bad command-line arguments or API misuse."""


class DataError(SplatarError):
    """Invalid or inconsistent input data."""


class ManifestSchemaError(DataError):
    """Corpus manifest failed to parse or has an unsupported schema."""


class DuplicateReferenceError(DataError):
    """More than one frame in a corpus is tagged as the reference."""


class MissingFileError(DataError):
    """A file referenced by a manifest or flag does not exist."""


class DecodeError(DataError):
    """An image or float-map file exists but cannot be decoded."""


class CheckpointError(DataError):
    """Checkpoint is truncated, has a bad version, or mismatched rig hash."""


class NumericError(SplatarError):
    """A numeric failure (non-finite loss, degenerate geometry) aborted a run."""
