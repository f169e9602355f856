"""Reader/writer for extensible-record-format (ERF) trace files.

An ERF file is a bare concatenation of records, no file header.  Each record
starts with a 16-byte fixed header:

    ts    8 bytes  little-endian 64-bit fixed-point timestamp
    type  1 byte   record type (2 = Ethernet, the only type supported here)
    flags 1 byte   bits 0-1 interface id, bit 3 truncated, bit 4 rx error
    rlen  2 bytes  big-endian, total record length including this header
    lctr  2 bytes  big-endian, packets lost since the previous record
    wlen  2 bytes  big-endian, original on-the-wire frame length

Ethernet records follow with one offset byte and one pad byte before the
captured frame, so the header overhead for type 2 is 18 bytes.  The timestamp
keeps seconds since the Unix epoch in the upper 32 bits and fractional seconds
in units of 2**-32 s in the lower 32 bits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

from .errors import FrameTooLarge, MalformedLength, TruncatedRecord, UnsupportedType

ERF_TYPE_ETHERNET = 2
FIXED_HEADER_LEN = 16
# Ethernet records carry an extra offset + pad byte pair.
ETHERNET_OVERHEAD = FIXED_HEADER_LEN + 2

FLAG_IFACE_MASK = 0x03
FLAG_TRUNCATED = 0x08
FLAG_RX_ERROR = 0x10

_FIXED_HEAD = struct.Struct("<QBB")   # ts, type, flags
_FIXED_TAIL = struct.Struct(">HHH")   # rlen, lctr, wlen

MICROS_PER_SECOND = 1_000_000


@dataclass(frozen=True, order=True)
class ErfTimestamp:
    """64-bit fixed-point timestamp: seconds << 32 | fractional 2**-32 s."""

    raw: int

    def __post_init__(self) -> None:
        if not 0 <= self.raw < 1 << 64:
            raise ValueError(f"timestamp out of 64-bit range: {self.raw:#x}")

    @classmethod
    def from_parts(cls, sec: int, frac: int) -> "ErfTimestamp":
        return cls((sec << 32) | frac)

    @classmethod
    def from_seconds(cls, seconds: float) -> "ErfTimestamp":
        return cls(round(seconds * (1 << 32)))

    @classmethod
    def from_micros(cls, sec: int, usec: int) -> "ErfTimestamp":
        if not 0 <= usec < MICROS_PER_SECOND:
            raise ValueError(f"microseconds out of range: {usec}")
        frac = (usec * (1 << 32) + MICROS_PER_SECOND // 2) // MICROS_PER_SECOND
        return cls.from_parts(sec, frac)

    @classmethod
    def from_datetime(cls, when: datetime) -> "ErfTimestamp":
        if when.tzinfo is None:
            when = when.replace(tzinfo=timezone.utc)
        return cls.from_micros(int(when.replace(microsecond=0).timestamp()),
                               when.microsecond)

    @property
    def sec(self) -> int:
        return self.raw >> 32

    @property
    def frac(self) -> int:
        return self.raw & 0xFFFF_FFFF

    def to_micros(self) -> tuple[int, int]:
        """Round to microseconds, carrying into the seconds on overflow.

        Rounding (not truncation) keeps the absolute conversion error within
        half a microsecond.
        """
        usec = (self.frac * MICROS_PER_SECOND + (1 << 31)) >> 32
        sec = self.sec
        if usec == MICROS_PER_SECOND:
            sec += 1
            usec = 0
        return sec, usec

    def to_fraction(self) -> Fraction:
        """Exact value in seconds."""
        return Fraction(self.raw, 1 << 32)

    def to_datetime(self) -> datetime:
        sec, usec = self.to_micros()
        return datetime.fromtimestamp(sec, tz=timezone.utc).replace(microsecond=usec)

    def seconds(self) -> float:
        return self.raw / (1 << 32)


@dataclass(frozen=True)
class TraceRecord:
    """One captured packet, in memory.

    ``frame`` holds the captured bytes starting at the Ethernet header;
    ``wlen`` is the original on-the-wire length, which stays put when the
    frame is truncated to headers.  ``rlen`` is derived, never stored.
    """

    ts: ErfTimestamp
    flags: int
    lctr: int
    wlen: int
    frame: bytes
    link_type: int = ERF_TYPE_ETHERNET

    def __post_init__(self) -> None:
        if not 0 <= self.flags <= 0xFF:
            raise ValueError(f"flags out of byte range: {self.flags}")
        if not 0 <= self.lctr <= 0xFFFF:
            raise ValueError(f"loss counter out of 16-bit range: {self.lctr}")
        if not 0 <= self.wlen <= 0xFFFF:
            raise ValueError(f"wire length out of 16-bit range: {self.wlen}")
        if self.wlen < len(self.frame):
            raise ValueError(
                f"wire length {self.wlen} smaller than captured frame {len(self.frame)}"
            )

    @property
    def rlen(self) -> int:
        return ETHERNET_OVERHEAD + len(self.frame)

    @property
    def iface(self) -> int:
        return self.flags & FLAG_IFACE_MASK

    @property
    def truncated(self) -> bool:
        return bool(self.flags & FLAG_TRUNCATED)

    @property
    def rx_error(self) -> bool:
        return bool(self.flags & FLAG_RX_ERROR)

    def with_frame(self, frame: bytes, mark_truncated: bool = False) -> "TraceRecord":
        flags = self.flags | FLAG_TRUNCATED if mark_truncated else self.flags
        return replace(self, frame=frame, flags=flags)


def decode_record(stream: BinaryIO) -> TraceRecord | None:
    """Read one record off ``stream``; None at a clean end of file.

    The stream must be positioned at a record boundary.  On success exactly
    ``rlen`` bytes have been consumed.
    """
    head = stream.read(FIXED_HEADER_LEN)
    if not head:
        return None
    if len(head) < FIXED_HEADER_LEN:
        raise TruncatedRecord(f"{len(head)} trailing bytes, need {FIXED_HEADER_LEN}")
    raw_ts, rtype, flags = _FIXED_HEAD.unpack_from(head, 0)
    rlen, lctr, wlen = _FIXED_TAIL.unpack_from(head, 10)
    if rtype != ERF_TYPE_ETHERNET:
        raise UnsupportedType(f"record type {rtype}, only Ethernet (2) is supported")
    if rlen < ETHERNET_OVERHEAD:
        raise MalformedLength(f"rlen {rlen} below Ethernet minimum {ETHERNET_OVERHEAD}")
    body = stream.read(rlen - FIXED_HEADER_LEN)
    if len(body) < rlen - FIXED_HEADER_LEN:
        raise TruncatedRecord(f"record declared {rlen} bytes, stream ran short")
    # body[0:2] are the offset/pad bytes; their values are not meaningful.
    return TraceRecord(ts=ErfTimestamp(raw_ts), flags=flags, lctr=lctr, wlen=wlen,
                       frame=body[2:])


def encode_record(rec: TraceRecord) -> bytes:
    """Serialize ``rec`` to exactly ``rec.rlen`` bytes."""
    rlen = rec.rlen
    if rlen > 0xFFFF:
        raise FrameTooLarge(f"record length {rlen} exceeds 16-bit field")
    return b"".join((
        _FIXED_HEAD.pack(rec.ts.raw, rec.link_type, rec.flags),
        _FIXED_TAIL.pack(rlen, rec.lctr, rec.wlen),
        b"\x00\x00",  # offset + pad
        rec.frame,
    ))


def read_records(source: BinaryIO | str | Path) -> Iterator[TraceRecord]:
    """Iterate all records of an ERF file or readable binary stream."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from read_records(fh)
        return
    while True:
        rec = decode_record(source)
        if rec is None:
            return
        yield rec


def write_records(dest: BinaryIO | str | Path, records: Iterable[TraceRecord]) -> int:
    """Write records to an ERF file or writable binary stream; returns count."""
    if isinstance(dest, (str, Path)):
        with open(dest, "wb") as fh:
            return write_records(fh, records)
    count = 0
    for rec in records:
        dest.write(encode_record(rec))
        count += 1
    return count
