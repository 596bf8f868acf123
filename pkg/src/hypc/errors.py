"""Exception types shared across the package."""


class HypcError(Exception):
    """Base class for all package-specific errors."""


class DataError(HypcError):
    """Input data violates a precondition (NaN/Inf weights, length mismatch)."""


class FormatError(HypcError):
    """Serialized bytes are malformed: bad magic, truncation, out-of-range index."""


class ConsistencyError(HypcError):
    """Stored geometry disagrees with the data it claims to describe."""
