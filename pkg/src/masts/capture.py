"""Continuous ingestion: strip, anonymize, rotate into bounded trace files.

Files live under ``<archive_root>/<probe>/<link>/`` with the naming
convention ``<probe>_<link>_<UTC yyyymmddThhmmss>_<seq>.erf``.  A file being
written carries a ``.tmp`` suffix and is atomically renamed when sealed, so
downstream pollers never observe partial files.  Each sealed file gets a
``.meta.json`` sidecar with the same stem.

Rotation decisions use record timestamps, not the wall clock, so a capture
replayed from the same input produces an identical archive tree.
"""

from __future__ import annotations

import errno
import json
import os
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator

from .anonymize import RecordAnonymizer
from .erf import ErfTimestamp, TraceRecord, encode_record
from .errors import BadName, EmptyFile, NonMonotonicInput, StorageFull
from .headers import strip_payload
from .timefmt import iso_utc, parse_iso

DEFAULT_MAX_BYTES = 256 * 1024 * 1024
DEFAULT_MAX_INTERVAL = 300.0

# TDM slot length: the worst cross-direction timestamp skew the port mirror
# can introduce, which the merge stage must tolerate.
DEFAULT_MAX_SKEW = 15.625e-6

_IDENT_RE = re.compile(r"^[A-Za-z0-9-]+$")
_NAME_RE = re.compile(
    r"^(?P<probe>[A-Za-z0-9-]+)_(?P<link>[A-Za-z0-9-]+)"
    r"_(?P<time>\d{8}T\d{6})_(?P<seq>\d{6,})\.erf$"
)
_NAME_TIME_FMT = "%Y%m%dT%H%M%S"


@dataclass(frozen=True)
class RotationPolicy:
    """Upper bounds on a single trace file: bytes and capture-time span."""

    max_bytes: int = DEFAULT_MAX_BYTES
    max_interval: float = DEFAULT_MAX_INTERVAL

    def __post_init__(self) -> None:
        if self.max_bytes <= 0:
            raise ValueError("max_bytes must be positive")
        if self.max_interval <= 0:
            raise ValueError("max_interval must be positive")

    @property
    def max_interval_raw(self) -> int:
        return int(self.max_interval * (1 << 32))


@dataclass(frozen=True)
class SkewBound:
    """Worst-case cross-direction timestamp error of the two input streams."""

    max_skew: float = DEFAULT_MAX_SKEW

    def __post_init__(self) -> None:
        if self.max_skew < 0:
            raise ValueError("max_skew must be non-negative")


class FileState(str, Enum):
    OPEN = "open"
    SEALED = "sealed"
    EXPIRED = "expired"


@dataclass
class TraceFileMeta:
    """Per-file metadata: window covered, identity, tallies, lifecycle."""

    file_name: str
    probe_id: str
    link_id: str
    t_start: datetime
    t_end: datetime
    packet_count: int
    byte_count: int
    lost_packets: int
    anonymized: bool
    state: FileState = FileState.SEALED

    def __post_init__(self) -> None:
        if self.t_start > self.t_end:
            raise ValueError("t_start after t_end")
        if min(self.packet_count, self.byte_count, self.lost_packets) < 0:
            raise ValueError("negative tally")

    def to_json_dict(self) -> dict:
        return {
            "file_name": self.file_name,
            "probe_id": self.probe_id,
            "link_id": self.link_id,
            "t_start": iso_utc(self.t_start),
            "t_end": iso_utc(self.t_end),
            "packet_count": self.packet_count,
            "byte_count": self.byte_count,
            "lost_packets": self.lost_packets,
            "anonymized": self.anonymized,
            "state": self.state.value,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TraceFileMeta":
        return cls(
            file_name=data["file_name"],
            probe_id=data["probe_id"],
            link_id=data["link_id"],
            t_start=parse_iso(data["t_start"]),
            t_end=parse_iso(data["t_end"]),
            packet_count=data["packet_count"],
            byte_count=data["byte_count"],
            lost_packets=data["lost_packets"],
            anonymized=data["anonymized"],
            state=FileState(data["state"]),
        )


def sidecar_name(file_name: str) -> str:
    return file_name[:-len(".erf")] + ".meta.json" if file_name.endswith(".erf") \
        else file_name + ".meta.json"


def file_name(probe_id: str, link_id: str, open_time: datetime, seq: int) -> str:
    """Build the strict archive file name.

    Identifiers are limited to [A-Za-z0-9-] so the underscore-separated name
    parses back unambiguously; the time component carries whole seconds.
    """
    for ident in (probe_id, link_id):
        if not _IDENT_RE.match(ident):
            raise BadName(f"identifier {ident!r} not of the form [A-Za-z0-9-]+")
    if seq < 0:
        raise BadName(f"negative sequence number {seq}")
    if open_time.tzinfo is not None:
        open_time = open_time.astimezone(timezone.utc)
    stamp = open_time.strftime(_NAME_TIME_FMT)
    return f"{probe_id}_{link_id}_{stamp}_{seq:06d}.erf"


def parse_file_name(name: str) -> tuple[str, str, datetime, int]:
    """Inverse of :func:`file_name`; BadName for anything else."""
    m = _NAME_RE.match(name)
    if not m:
        raise BadName(f"{name!r} does not follow the naming convention")
    when = datetime.strptime(m.group("time"), _NAME_TIME_FMT).replace(tzinfo=timezone.utc)
    return m.group("probe"), m.group("link"), when, int(m.group("seq"))


class TraceFileWriter:
    """Appends records into size- and time-bounded files under the archive.

    One writer per (probe, link, direction).  ``append`` may seal the current
    file first and returns the sealed metadata when it does; ``close`` seals
    whatever is open.  A record is never split across files.
    """

    def __init__(self, archive_root: str | Path, probe_id: str, link_id: str,
                 policy: RotationPolicy | None = None, anonymized: bool = False,
                 start_seq: int = 0) -> None:
        for ident in (probe_id, link_id):
            if not _IDENT_RE.match(ident):
                raise BadName(f"identifier {ident!r} not of the form [A-Za-z0-9-]+")
        self.directory = Path(archive_root) / probe_id / link_id
        self.directory.mkdir(parents=True, exist_ok=True)
        self.probe_id = probe_id
        self.link_id = link_id
        self.policy = policy or RotationPolicy()
        self.anonymized = anonymized
        self.seq = start_seq
        self.sealed_metas: list[TraceFileMeta] = []
        self._fh: IO[bytes] | None = None
        self._tmp_path: Path | None = None
        self._final_name: str | None = None
        self._open_ts: ErfTimestamp | None = None
        self._last_ts: ErfTimestamp | None = None
        self._size = 0
        self._packets = 0
        self._lost = 0

    @property
    def open_file(self) -> str | None:
        return self._final_name

    def append(self, rec: TraceRecord) -> TraceFileMeta | None:
        """Write one record, rotating first if it would breach a bound."""
        encoded = encode_record(rec)
        sealed = None
        if self._fh is not None:
            over_size = self._size + len(encoded) > self.policy.max_bytes
            over_time = rec.ts.raw - self._open_ts.raw > self.policy.max_interval_raw
            if over_size or over_time:
                sealed = self.seal()
        if self._fh is None:
            self._open(rec.ts)
        try:
            self._fh.write(encoded)
        except OSError as exc:
            if exc.errno == errno.ENOSPC:
                raise StorageFull(str(exc)) from exc
            raise
        self._size += len(encoded)
        self._packets += 1
        self._lost += rec.lctr
        self._last_ts = rec.ts
        return sealed

    def _open(self, ts: ErfTimestamp) -> None:
        self._final_name = file_name(self.probe_id, self.link_id,
                                     ts.to_datetime(), self.seq)
        self._tmp_path = self.directory / (self._final_name + ".tmp")
        self._fh = open(self._tmp_path, "wb")
        self._open_ts = ts
        self._last_ts = ts
        self._size = 0
        self._packets = 0
        self._lost = 0

    def seal(self) -> TraceFileMeta:
        """Close, atomically rename, and emit metadata for the current file."""
        if self._fh is None or self._packets == 0:
            if self._fh is not None:
                self._fh.close()
                self._tmp_path.unlink(missing_ok=True)
                self._reset()
            raise EmptyFile("no records written since the file was opened")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._fh.close()
        final_path = self.directory / self._final_name
        os.replace(self._tmp_path, final_path)
        meta = TraceFileMeta(
            file_name=self._final_name,
            probe_id=self.probe_id,
            link_id=self.link_id,
            t_start=self._open_ts.to_datetime(),
            t_end=self._last_ts.to_datetime(),
            packet_count=self._packets,
            byte_count=self._size,
            lost_packets=self._lost,
            anonymized=self.anonymized,
            state=FileState.SEALED,
        )
        sidecar = self.directory / sidecar_name(self._final_name)
        sidecar.write_text(json.dumps(meta.to_json_dict(), indent=2) + "\n")
        self.sealed_metas.append(meta)
        self.seq += 1
        self._reset()
        return meta

    def _reset(self) -> None:
        self._fh = None
        self._tmp_path = None
        self._final_name = None
        self._open_ts = None
        self._last_ts = None
        self._size = 0
        self._packets = 0
        self._lost = 0

    def close(self) -> TraceFileMeta | None:
        """Seal any open file; None when nothing was pending."""
        if self._fh is None:
            return None
        try:
            return self.seal()
        except EmptyFile:
            return None

    def __enter__(self) -> "TraceFileWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def merge_directions(a: Iterable[TraceRecord], b: Iterable[TraceRecord],
                     bound: SkewBound | None = None,
                     names: tuple[str, str] = ("a", "b")) -> Iterator[TraceRecord]:
    """Stable timestamp merge of the two direction streams.

    Each input must be internally non-decreasing (NonMonotonicInput names the
    offender and record index otherwise); relative order within a direction
    is preserved exactly, with stream ``a`` winning timestamp ties.  Output
    equals a stable full sort of the union whenever the true cross-stream
    interleave error stays within ``bound`` (the TDM slot length by default).
    A record is released only once the other stream has advanced past it, so
    buffering stays proportional to the skew window.
    """
    if bound is None:
        bound = SkewBound()

    def checked(stream: Iterable[TraceRecord], name: str) -> Iterator[TraceRecord]:
        last = None
        for index, rec in enumerate(stream):
            if last is not None and rec.ts.raw < last:
                raise NonMonotonicInput(name, index)
            last = rec.ts.raw
            yield rec

    it_a = checked(a, names[0])
    it_b = checked(b, names[1])
    head_a = next(it_a, None)
    head_b = next(it_b, None)
    while head_a is not None and head_b is not None:
        if head_a.ts.raw <= head_b.ts.raw:
            yield head_a
            head_a = next(it_a, None)
        else:
            yield head_b
            head_b = next(it_b, None)
    while head_a is not None:
        yield head_a
        head_a = next(it_a, None)
    while head_b is not None:
        yield head_b
        head_b = next(it_b, None)


@dataclass
class PipelineStats:
    records: int = 0
    bytes_written: int = 0
    files_sealed: int = 0
    anonymize_skipped: int = 0
    strip_failed: int = 0


def run_capture(records: Iterable[TraceRecord], archive_root: str | Path,
                probe_id: str, link_id: str,
                policy: RotationPolicy | None = None,
                anonymizer: RecordAnonymizer | None = None,
                strip: bool = True) -> tuple[list[TraceFileMeta], PipelineStats]:
    """Drive the strip -> anonymize -> rotate pipeline over a record stream.

    Payload is discarded before anonymization so the minimum of bytes is held
    at any stage.  Records a stage cannot process (runt frames, non-IP) pass
    through unmodified and are tallied; the archive keeps everything.
    """
    stats = PipelineStats()
    with TraceFileWriter(archive_root, probe_id, link_id, policy,
                         anonymized=anonymizer is not None) as writer:
        for rec in records:
            if strip:
                try:
                    rec = strip_payload(rec)
                except Exception:
                    stats.strip_failed += 1
            if anonymizer is not None:
                rec = anonymizer.anonymize_record(rec)
            writer.append(rec)
            stats.records += 1
            stats.bytes_written += rec.rlen
        if anonymizer is not None:
            stats.anonymize_skipped = anonymizer.skipped
    metas = list(writer.sealed_metas)
    stats.files_sealed = len(metas)
    return metas, stats
