"""Classic (microsecond, little-endian) pcap file reader and writer.

Layout: a 24-byte global header (magic 0xa1b2c3d4, version 2.4, thiszone 0,
sigfigs 0, snaplen, linktype) followed by 16-byte per-record headers.  The
nanosecond and pcapng variants are out of scope.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

from .errors import MalformedLength, TruncatedRecord, UnsupportedType

PCAP_MAGIC = 0xA1B2C3D4
PCAP_VERSION = (2, 4)
LINKTYPE_ETHERNET = 1
DEFAULT_SNAPLEN = 65535
MICROS_PER_SECOND = 1_000_000

_GLOBAL_HEADER = struct.Struct("<IHHiIII")
_RECORD_HEADER = struct.Struct("<IIII")


@dataclass(frozen=True)
class PcapRecord:
    """One pcap record: microsecond timestamp plus captured/original lengths."""

    ts_sec: int
    ts_usec: int
    orig_len: int
    frame: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.ts_usec < MICROS_PER_SECOND:
            raise ValueError(f"ts_usec out of range: {self.ts_usec}")
        if self.orig_len < len(self.frame):
            raise ValueError(
                f"orig_len {self.orig_len} smaller than captured frame {len(self.frame)}"
            )

    @property
    def incl_len(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class PcapHeader:
    snaplen: int = DEFAULT_SNAPLEN
    linktype: int = LINKTYPE_ETHERNET


def encode_global_header(header: PcapHeader) -> bytes:
    return _GLOBAL_HEADER.pack(PCAP_MAGIC, *PCAP_VERSION, 0, 0,
                               header.snaplen, header.linktype)


def decode_global_header(stream: BinaryIO) -> PcapHeader:
    raw = stream.read(_GLOBAL_HEADER.size)
    if len(raw) < _GLOBAL_HEADER.size:
        raise TruncatedRecord("file shorter than a pcap global header")
    magic, major, minor, _zone, _sigfigs, snaplen, linktype = _GLOBAL_HEADER.unpack(raw)
    if magic != PCAP_MAGIC:
        raise UnsupportedType(
            f"magic {magic:#010x}; only classic little-endian pcap is supported"
        )
    if (major, minor) != PCAP_VERSION:
        raise UnsupportedType(f"pcap version {major}.{minor}, expected 2.4")
    return PcapHeader(snaplen=snaplen, linktype=linktype)


def decode_pcap_record(stream: BinaryIO) -> PcapRecord | None:
    head = stream.read(_RECORD_HEADER.size)
    if not head:
        return None
    if len(head) < _RECORD_HEADER.size:
        raise TruncatedRecord(f"{len(head)} trailing bytes in pcap record header")
    ts_sec, ts_usec, incl_len, orig_len = _RECORD_HEADER.unpack(head)
    if ts_usec >= MICROS_PER_SECOND:
        raise MalformedLength(f"ts_usec {ts_usec} not below 10^6")
    if incl_len > orig_len:
        raise MalformedLength(f"incl_len {incl_len} exceeds orig_len {orig_len}")
    frame = stream.read(incl_len)
    if len(frame) < incl_len:
        raise TruncatedRecord(f"record declared {incl_len} frame bytes, stream ran short")
    return PcapRecord(ts_sec=ts_sec, ts_usec=ts_usec, orig_len=orig_len, frame=frame)


def encode_pcap_record(rec: PcapRecord) -> bytes:
    return _RECORD_HEADER.pack(rec.ts_sec, rec.ts_usec, rec.incl_len, rec.orig_len) \
        + rec.frame


def read_pcap(source: BinaryIO | str | Path) -> Iterator[PcapRecord]:
    """Iterate records of a classic pcap file; the global header is checked."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from read_pcap(fh)
        return
    decode_global_header(source)
    while True:
        rec = decode_pcap_record(source)
        if rec is None:
            return
        yield rec


def write_pcap(dest: BinaryIO | str | Path, records: Iterable[PcapRecord],
               header: PcapHeader | None = None) -> int:
    """Write a pcap file; returns the record count.

    The global header goes out first, so the snap length must be chosen up
    front (callers converting a stream pass a configured cap).
    """
    if isinstance(dest, (str, Path)):
        with open(dest, "wb") as fh:
            return write_pcap(fh, records, header)
    dest.write(encode_global_header(header or PcapHeader()))
    count = 0
    for rec in records:
        dest.write(encode_pcap_record(rec))
        count += 1
    return count
