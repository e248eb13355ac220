"""Error taxonomy shared by every martlens module.

All domain failures derive from MartlensError so the CLI can map them to
exit code 1 and the service can map them to structured API errors.
"""

from __future__ import annotations


class MartlensError(Exception):
    """Base class for all domain errors raised by this package."""


class SchemaError(MartlensError):
    """A table or record does not satisfy its declared schema."""


class ParseError(MartlensError):
    """A CSV cell or row could not be parsed.

    ``row`` is the 1-based data-row index (the header is row 0) and
    ``col`` is the offending column name, or None for row-level faults.
    """

    def __init__(self, message: str, row: int | None = None, col: str | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class InvalidFraction(MartlensError):
    """A split fraction fell outside the open interval (0, 1)."""


class NonFiniteInput(MartlensError):
    """A numeric input contained NaN or infinity."""


class SingularMatrix(MartlensError):
    """The (weighted) Gram matrix is rank deficient at lambda = 0."""


class SchemaMismatch(MartlensError):
    """A record does not conform to a model's feature schema."""

    def __init__(self, message: str, missing: tuple[str, ...] = (), extra: tuple[str, ...] = ()):
        super().__init__(message)
        self.missing = missing
        self.extra = extra


class ScoreUndefined(MartlensError):
    """R^2 is undefined: constant targets with nonzero residuals."""


class TooFewValues(MartlensError):
    """Fewer training values than requested quantile bins."""


class DimensionMismatch(MartlensError):
    """Two vectors or frames that must agree in shape do not."""


class LabelError(MartlensError):
    """A bin-label string does not match the documented grammar."""


class InvalidScheme(MartlensError):
    """A weight-band scheme with non-positive width or too few classes."""


class InvalidStride(MartlensError):
    """Frame-sampling stride below 1."""


class MalformedPacket(MartlensError):
    """A wire buffer violates the length-prefixed packet framing."""


class ChecksumRejected(MartlensError):
    """A packet payload failed its CRC32 check at the receiver."""


class EndpointUnreachable(MartlensError):
    """The ingestion endpoint stayed unreachable after the retry budget."""


class NotFound(MartlensError):
    """A persisted dataset or model id is unknown."""
