"""Exception hierarchy shared by every decoq module."""


class DecoqError(Exception):
    """Base class for all library errors."""


class UsageError(DecoqError, ValueError):
    """Bad arguments: layout mismatch, empty keep sets, malformed specs."""


class ValidationError(DecoqError, ValueError):
    """An operator failed a structural check (e.g. non-Hermitian generator)."""


class CapacityError(DecoqError):
    """Composite dimension exceeds the configured cap."""


class TruncationError(DecoqError):
    """A bosonic state leaks too much weight outside its Fock truncation."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class PrecisionError(DecoqError):
    """A finite-difference estimate could not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConsistencyError(DecoqError):
    """An internal invariant was violated (e.g. clearly negative s2)."""
