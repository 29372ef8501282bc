"""Exception taxonomy shared across the package.

Every error carries a stable ``code`` string so the HTTP service and the
CLI can map failures to wire payloads and exit codes without string
matching on messages.
"""


class HbfError(Exception):
    code = "error"


class InvalidArgumentError(HbfError, ValueError):
    code = "invalid-argument"


class DimensionMismatchError(InvalidArgumentError):
    code = "dimension-mismatch"


class UnsupportedDimensionError(InvalidArgumentError):
    code = "unsupported-dimension"


class DuplicateKeyError(HbfError, ValueError):
    code = "duplicate-key"


class DuplicateLabelError(HbfError, ValueError):
    code = "duplicate-label"


class RecordFormatError(HbfError, ValueError):
    code = "record-format"


class CalibrationError(HbfError):
    code = "degenerate-calibration"


class PersistenceError(HbfError):
    code = "persistence"


class BadMagicError(PersistenceError):
    code = "bad-magic"


class VersionMismatchError(PersistenceError):
    code = "version-mismatch"


class TruncatedFileError(PersistenceError):
    code = "truncated-file"
