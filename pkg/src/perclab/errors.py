"""Exception types shared across the package."""


class PerclabError(ValueError):
    """Base class for contract violations raised by this package."""


class DimensionMismatchError(PerclabError):
    """Two objects that must share a dimension do not."""


class ExactRegimeError(PerclabError):
    """A full-enumeration operation was asked to run above the exact-regime cap."""


class NoWitnessError(PerclabError):
    """No automorphism witness exists (some pattern class cardinality differs)."""


class MalformedEncodingError(PerclabError):
    """A pattern partition does not partition the index set."""


class NotAdmissibleError(PerclabError):
    """A sequence required to be admissible is not."""
