"""Exception types shared across the toolkit.

Grouped here so the CLI can map whole families onto exit codes: anything
deriving from :class:`MastsError` is a data/contract error (exit 2), while
plain ``OSError`` keeps meaning I/O trouble (exit 3).
"""

from __future__ import annotations


class MastsError(Exception):
    """Base class for all toolkit errors."""


# -- trace file codecs -------------------------------------------------------

class TraceFormatError(MastsError):
    """A trace file or record violates its on-disk format."""


class TruncatedRecord(TraceFormatError):
    """The stream ended before the record it declared was complete."""


class UnsupportedType(TraceFormatError):
    """Record or file type this toolkit does not handle."""


class MalformedLength(TraceFormatError):
    """A declared length field is impossible for the record type."""


class FrameTooLarge(TraceFormatError):
    """Frame does not fit the 16-bit record length field."""


# -- header parsing -----------------------------------------------------------

class FrameTooShort(MastsError):
    """Frame is shorter than a minimal Ethernet header."""


# -- anonymization ------------------------------------------------------------

class BadKeyLength(MastsError):
    """Anonymization key material is not exactly 256 bits."""


# -- capture pipeline ---------------------------------------------------------

class BadName(MastsError):
    """Trace file name does not follow the naming convention."""


class EmptyFile(MastsError):
    """A trace file was sealed with zero records."""


class NonMonotonicInput(MastsError):
    """A direction stream handed the merge out-of-order timestamps."""

    def __init__(self, stream: str, index: int) -> None:
        super().__init__(f"stream {stream!r} is non-monotonic at record {index}")
        self.stream = stream
        self.index = index


class BadConfig(MastsError):
    """Synthetic source configuration is unusable."""


class StorageFull(MastsError):
    """The archive volume ran out of space; the writer halts."""


# -- summaries ----------------------------------------------------------------

class BadN(MastsError):
    """Sampling ratio denominator must be >= 1."""


class ZeroRate(MastsError):
    """Storage budget arithmetic needs a positive mean rate."""


# -- archive catalog ----------------------------------------------------------

class DuplicateEntry(MastsError):
    """A trace file with this name is already catalogued."""


class MissingFile(MastsError):
    """Metadata points at a trace file that is not on disk."""


class MalformedXml(MastsError):
    """Probe configuration document cannot be parsed."""


class MissingField(MastsError):
    """Probe configuration document lacks a required element."""


class BadWindow(MastsError):
    """Search window has start > end."""


class QuotaExhausted(MastsError):
    """No pin slots left under the retention policy quota."""


# -- access service -----------------------------------------------------------

class UsernameTaken(MastsError):
    """Registration with an already-used username."""


class UnknownUser(MastsError):
    """Operation on a username that is not registered."""


class AupRequired(MastsError):
    """Packet-data access attempted before accepting the AUP."""


class CategoryForbidden(MastsError):
    """User category is never allowed packet-level data."""


class FileExpired(MastsError):
    """Metadata exists but the trace file has been removed."""
