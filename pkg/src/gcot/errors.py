"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so new error conditions should reuse
one of the classes below rather than raising bare ValueError.
"""


class GcotError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GcotError):
    """Invalid configuration: bad flag value, malformed config file."""


class DataError(GcotError):
    """Dataset problems: missing files, count mismatches, broken references."""


class FormatError(DataError):
    """Unreadable or wrong-version serialized artifact (checkpoints, datasets)."""


class DimensionError(GcotError):
    """Shape contract violation between tensors or model components."""


class NumericError(GcotError):
    """A numeric operation produced or received non-finite values."""


class DegenerateInputError(NumericError):
    """Input is structurally unusable: zero-norm vector, zero-edge graph."""
