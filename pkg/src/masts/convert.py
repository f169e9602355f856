"""Conversion between ERF and pcap record streams.

ERF to pcap loses two things by design: sub-microsecond timestamp precision
(bounded by half a microsecond through round-to-nearest) and the per-record
rx-error flag.  Loss counters do not fit pcap either; their sum is surfaced
in the conversion stats so the information is not silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

from .erf import ErfTimestamp, TraceRecord, read_records, write_records
from .pcap import DEFAULT_SNAPLEN, PcapHeader, PcapRecord, read_pcap, write_pcap


@dataclass
class ConversionStats:
    records: int = 0
    total_lost: int = 0
    rx_error_records: int = 0
    max_frame_len: int = 0

    def observe(self, rec: TraceRecord) -> None:
        self.records += 1
        self.total_lost += rec.lctr
        self.rx_error_records += int(rec.rx_error)
        self.max_frame_len = max(self.max_frame_len, len(rec.frame))


def erf_record_to_pcap(rec: TraceRecord) -> PcapRecord:
    """Map one ERF record: incl_len = captured frame, orig_len = wire length."""
    sec, usec = rec.ts.to_micros()
    return PcapRecord(ts_sec=sec, ts_usec=usec, orig_len=rec.wlen, frame=rec.frame)


def pcap_record_to_erf(rec: PcapRecord) -> TraceRecord:
    """Map one pcap record back; loss counters and flags are unknown, so zero."""
    return TraceRecord(ts=ErfTimestamp.from_micros(rec.ts_sec, rec.ts_usec),
                       flags=0, lctr=0, wlen=rec.orig_len, frame=rec.frame)


def erf_to_pcap_records(records: Iterable[TraceRecord],
                        stats: ConversionStats | None = None) -> Iterator[PcapRecord]:
    """Convert a record stream, one pcap record per trace record.

    Records flagged rx-error are converted too (the flag itself is lost);
    archive completeness outranks cleanliness.
    """
    for rec in records:
        if stats is not None:
            stats.observe(rec)
        yield erf_record_to_pcap(rec)


def convert_erf_to_pcap(erf_in: BinaryIO | str | Path, pcap_out: BinaryIO | str | Path,
                        snaplen: int = DEFAULT_SNAPLEN) -> ConversionStats:
    """Stream an ERF file into a pcap file.

    ``snaplen`` is the cap written to the global header; streaming cannot
    know the maximum frame length up front.
    """
    stats = ConversionStats()
    write_pcap(pcap_out, erf_to_pcap_records(read_records(erf_in), stats),
               PcapHeader(snaplen=snaplen))
    return stats


def convert_pcap_to_erf(pcap_in: BinaryIO | str | Path,
                        erf_out: BinaryIO | str | Path) -> ConversionStats:
    """Stream a classic pcap file into an ERF file."""
    stats = ConversionStats()

    def records() -> Iterator[TraceRecord]:
        for prec in read_pcap(pcap_in):
            rec = pcap_record_to_erf(prec)
            stats.observe(rec)
            yield rec

    write_records(erf_out, records())
    return stats
