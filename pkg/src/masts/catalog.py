"""Persistent archive catalog: trace-file metadata, probe configs, retention.

Backed by an embedded sqlite database next to the archive so a desk-scale
deployment needs no external service; every write is a committed transaction
and the catalog survives restarts bit-for-bit in query results.

The cardinal rule: metadata is never deleted.  Expiry removes trace files
from disk but flips their entries to ``expired``/absent, and search keeps
returning them.  Expiry deletes the file before flipping the flag, so a
crash in between leaves a missing file with a stale flag, which is what the
startup audit reconciles.
"""

from __future__ import annotations

import sqlite3
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping

from .capture import FileState, TraceFileMeta, sidecar_name
from .errors import (BadWindow, DuplicateEntry, MalformedXml, MissingField,
                     MissingFile, QuotaExhausted)
from .timefmt import iso_utc, parse_iso, utc_now

DAY = 86400.0

# Lifetimes proportioned to how fast each tier fills its store; summary data
# (sampled flows, time series) is kept for the lifetime of the project.
DEFAULT_LIFETIMES: Mapping[str, float | None] = {
    "full": 1 * DAY,
    "headers": 7 * DAY,
    "compressed_headers": 14 * DAY,
    "netflow": 90 * DAY,
    "sampled_netflow": None,
}

TIER_NAMES = tuple(DEFAULT_LIFETIMES)


@dataclass(frozen=True)
class RetentionPolicy:
    """Per-tier lifetimes in seconds (None = unbounded) plus the pin quota."""

    lifetimes: Mapping[str, float | None] = field(
        default_factory=lambda: dict(DEFAULT_LIFETIMES))
    pinned_sample_quota: int = 4

    def __post_init__(self) -> None:
        if self.pinned_sample_quota < 0:
            raise ValueError("pin quota must be non-negative")
        if self.lifetimes.get("sampled_netflow") is not None:
            raise ValueError("summary tier lifetime must stay unbounded")

    def lifetime(self, tier: str) -> float | None:
        return self.lifetimes.get(tier)


@dataclass(frozen=True)
class ProbeConfig:
    """Monitoring-point description, provided out-of-band as XML."""

    probe_id: str
    hardware_desc: str
    software_desc: str
    link_id: str
    link_bandwidth_bps: int
    version: int = 1


@dataclass(frozen=True)
class CatalogEntry:
    meta: TraceFileMeta
    tier: str
    ingested_at: datetime
    file_present: bool
    pinned: bool

    @property
    def file_name(self) -> str:
        return self.meta.file_name

    @property
    def state(self) -> FileState:
        return self.meta.state


@dataclass
class ExpiryReport:
    removed: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)


def parse_probe_xml(text: str) -> ProbeConfig:
    """Parse ``<probe id=..><hardware/><software/><link id=.. bandwidth_bps=../></probe>``."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if root.tag != "probe":
        raise MalformedXml(f"root element is {root.tag!r}, expected 'probe'")
    probe_id = root.get("id")
    if not probe_id:
        raise MissingField("probe id attribute")
    hardware = root.find("hardware")
    software = root.find("software")
    link = root.find("link")
    if hardware is None or hardware.text is None:
        raise MissingField("hardware element")
    if software is None or software.text is None:
        raise MissingField("software element")
    if link is None:
        raise MissingField("link element")
    link_id = link.get("id")
    if not link_id:
        raise MissingField("link id attribute")
    bandwidth_text = link.get("bandwidth_bps")
    if bandwidth_text is None:
        raise MissingField("link bandwidth_bps attribute")
    try:
        bandwidth = int(bandwidth_text)
    except ValueError as exc:
        raise MalformedXml(f"bandwidth_bps {bandwidth_text!r} is not an integer") from exc
    if bandwidth <= 0:
        raise MalformedXml("bandwidth_bps must be positive")
    return ProbeConfig(probe_id=probe_id, hardware_desc=hardware.text.strip(),
                       software_desc=software.text.strip(), link_id=link_id,
                       link_bandwidth_bps=bandwidth)


_SCHEMA = """
CREATE TABLE IF NOT EXISTS trace_files (
    file_name    TEXT PRIMARY KEY,
    probe_id     TEXT NOT NULL,
    link_id      TEXT NOT NULL,
    t_start      TEXT NOT NULL,
    t_end        TEXT NOT NULL,
    packet_count INTEGER NOT NULL,
    byte_count   INTEGER NOT NULL,
    lost_packets INTEGER NOT NULL,
    anonymized   INTEGER NOT NULL,
    state        TEXT NOT NULL,
    tier         TEXT NOT NULL,
    ingested_at  TEXT NOT NULL,
    file_present INTEGER NOT NULL,
    pinned       INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_trace_window ON trace_files (t_start, t_end);
CREATE INDEX IF NOT EXISTS idx_trace_probe ON trace_files (probe_id, link_id);
CREATE TABLE IF NOT EXISTS probe_configs (
    probe_id      TEXT NOT NULL,
    version       INTEGER NOT NULL,
    hardware      TEXT NOT NULL,
    software      TEXT NOT NULL,
    link_id       TEXT NOT NULL,
    bandwidth_bps INTEGER NOT NULL,
    ingested_at   TEXT NOT NULL,
    PRIMARY KEY (probe_id, version)
);
"""


class Catalog:
    """Searchable store of trace-file metadata under one archive root.

    Reads may run concurrently; writes serialize through a single lock (and
    sqlite's own transaction discipline underneath).
    """

    def __init__(self, archive_root: str | Path,
                 db_path: str | Path | None = None) -> None:
        self.archive_root = Path(archive_root)
        self.archive_root.mkdir(parents=True, exist_ok=True)
        self.db_path = Path(db_path) if db_path else self.archive_root / "catalog.db"
        self._lock = threading.Lock()
        self._db = sqlite3.connect(self.db_path, check_same_thread=False)
        self._db.row_factory = sqlite3.Row
        with self._lock, self._db:
            self._db.executescript(_SCHEMA)

    def close(self) -> None:
        self._db.close()

    def __enter__(self) -> "Catalog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- paths ---------------------------------------------------------------

    def trace_path(self, entry_or_meta: "CatalogEntry | TraceFileMeta") -> Path:
        meta = entry_or_meta.meta if isinstance(entry_or_meta, CatalogEntry) \
            else entry_or_meta
        return self.archive_root / meta.probe_id / meta.link_id / meta.file_name

    # -- trace file entries ----------------------------------------------------

    def ingest(self, meta: TraceFileMeta, tier: str,
               ingested_at: datetime | None = None) -> CatalogEntry:
        """Persist one sealed file's metadata; the file itself must exist."""
        if meta.state != FileState.SEALED:
            raise ValueError(f"only sealed files are ingested, got {meta.state}")
        if tier not in TIER_NAMES:
            raise ValueError(f"unknown tier {tier!r}")
        path = self.archive_root / meta.probe_id / meta.link_id / meta.file_name
        if not path.is_file():
            raise MissingFile(str(path))
        ingested_at = ingested_at or utc_now()
        with self._lock, self._db:
            try:
                self._db.execute(
                    "INSERT INTO trace_files VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?)",
                    (meta.file_name, meta.probe_id, meta.link_id,
                     iso_utc(meta.t_start), iso_utc(meta.t_end),
                     meta.packet_count, meta.byte_count, meta.lost_packets,
                     int(meta.anonymized), meta.state.value, tier,
                     iso_utc(ingested_at), 1, 0))
            except sqlite3.IntegrityError as exc:
                raise DuplicateEntry(meta.file_name) from exc
        return self.entry(meta.file_name)

    def entry(self, file_name: str) -> CatalogEntry | None:
        row = self._db.execute(
            "SELECT * FROM trace_files WHERE file_name = ?", (file_name,)).fetchone()
        return _entry_from_row(row) if row else None

    def search(self, probe: str | None = None, link: str | None = None,
               t_from: datetime | None = None, t_to: datetime | None = None,
               tier: str | None = None) -> list[CatalogEntry]:
        """Entries matching every given filter, window-intersecting, by t_start.

        A window matches when [t_start, t_end] intersects [t_from, t_to];
        half-open filters are allowed.
        """
        if t_from is not None and t_to is not None and t_from > t_to:
            raise BadWindow(f"window start {t_from} after end {t_to}")
        clauses, params = [], []
        if probe is not None:
            clauses.append("probe_id = ?")
            params.append(probe)
        if link is not None:
            clauses.append("link_id = ?")
            params.append(link)
        if tier is not None:
            clauses.append("tier = ?")
            params.append(tier)
        if t_to is not None:
            clauses.append("t_start <= ?")
            params.append(iso_utc(t_to))
        if t_from is not None:
            clauses.append("t_end >= ?")
            params.append(iso_utc(t_from))
        sql = "SELECT * FROM trace_files"
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY t_start, file_name"
        return [_entry_from_row(row) for row in self._db.execute(sql, params)]

    def count(self) -> int:
        return self._db.execute("SELECT COUNT(*) FROM trace_files").fetchone()[0]

    # -- retention -------------------------------------------------------------

    def pin(self, file_name: str, policy: RetentionPolicy) -> CatalogEntry:
        """Mark a file as a long-term sample; pinned files never expire."""
        with self._lock, self._db:
            entry = self.entry(file_name)
            if entry is None:
                raise MissingFile(file_name)
            if entry.pinned:
                return entry
            pinned_now = self._db.execute(
                "SELECT COUNT(*) FROM trace_files WHERE pinned = 1").fetchone()[0]
            if pinned_now >= policy.pinned_sample_quota:
                raise QuotaExhausted(
                    f"quota {policy.pinned_sample_quota} reached, cannot pin {file_name}")
            self._db.execute(
                "UPDATE trace_files SET pinned = 1 WHERE file_name = ?", (file_name,))
        return self.entry(file_name)

    def expire(self, policy: RetentionPolicy,
               now: datetime | None = None) -> ExpiryReport:
        """Delete over-age, unpinned files from disk; keep all metadata.

        File first, flag second: idempotent and crash-safe, a half-done pass
        is retried next run (the unlink tolerates an already-missing file).
        """
        now = now or utc_now()
        report = ExpiryReport()
        with self._lock:
            rows = self._db.execute(
                "SELECT * FROM trace_files WHERE file_present = 1 AND pinned = 0"
            ).fetchall()
            for row in rows:
                lifetime = policy.lifetime(row["tier"])
                if lifetime is None:
                    continue
                age = (now - parse_iso(row["ingested_at"])).total_seconds()
                if age <= lifetime:
                    continue
                entry = _entry_from_row(row)
                path = self.trace_path(entry)
                try:
                    path.unlink(missing_ok=True)
                    sidecar = path.parent / sidecar_name(entry.file_name)
                    sidecar.unlink(missing_ok=True)
                except OSError as exc:
                    report.failed.append((entry.file_name, str(exc)))
                    continue
                with self._db:
                    self._db.execute(
                        "UPDATE trace_files SET file_present = 0, state = ? "
                        "WHERE file_name = ?",
                        (FileState.EXPIRED.value, entry.file_name))
                report.removed.append(entry.file_name)
        return report

    def audit(self, fix: bool = False) -> list[dict]:
        """Cross-check catalog flags against the files actually on disk.

        Returns one JSON-ready event per inconsistency; with ``fix`` set,
        entries pointing at vanished files are flipped to expired (the
        half-done-expiry case).  Trace files on disk without an entry are
        reported but never touched.
        """
        events: list[dict] = []
        with self._lock:
            rows = self._db.execute("SELECT * FROM trace_files").fetchall()
            known = set()
            for row in rows:
                entry = _entry_from_row(row)
                path = self.trace_path(entry)
                known.add(path.resolve())
                if entry.file_present and not path.is_file():
                    events.append({"kind": "missing_file", "file_name": entry.file_name,
                                   "fixed": bool(fix)})
                    if fix:
                        with self._db:
                            self._db.execute(
                                "UPDATE trace_files SET file_present = 0, state = ? "
                                "WHERE file_name = ?",
                                (FileState.EXPIRED.value, entry.file_name))
                elif not entry.file_present and path.is_file():
                    events.append({"kind": "unexpected_file",
                                   "file_name": entry.file_name, "fixed": False})
            for path in self.archive_root.glob("*/*/*.erf"):
                if path.resolve() not in known:
                    events.append({"kind": "uncatalogued_file",
                                   "file_name": path.name, "fixed": False})
        return events

    # -- probe configs -----------------------------------------------------------

    def ingest_probe_config(self, xml_text: str,
                            ingested_at: datetime | None = None) -> ProbeConfig:
        """Parse and persist a probe description; re-ingest appends a version."""
        config = parse_probe_xml(xml_text)
        ingested_at = ingested_at or utc_now()
        with self._lock, self._db:
            current = self._db.execute(
                "SELECT MAX(version) FROM probe_configs WHERE probe_id = ?",
                (config.probe_id,)).fetchone()[0]
            version = (current or 0) + 1
            self._db.execute(
                "INSERT INTO probe_configs VALUES (?,?,?,?,?,?,?)",
                (config.probe_id, version, config.hardware_desc,
                 config.software_desc, config.link_id,
                 config.link_bandwidth_bps, iso_utc(ingested_at)))
        return ProbeConfig(probe_id=config.probe_id, hardware_desc=config.hardware_desc,
                           software_desc=config.software_desc, link_id=config.link_id,
                           link_bandwidth_bps=config.link_bandwidth_bps, version=version)

    def probe(self, probe_id: str) -> ProbeConfig | None:
        row = self._db.execute(
            "SELECT * FROM probe_configs WHERE probe_id = ? "
            "ORDER BY version DESC LIMIT 1", (probe_id,)).fetchone()
        return _probe_from_row(row) if row else None

    def probes(self) -> list[ProbeConfig]:
        rows = self._db.execute(
            "SELECT p.* FROM probe_configs p JOIN (SELECT probe_id, MAX(version) v "
            "FROM probe_configs GROUP BY probe_id) m "
            "ON p.probe_id = m.probe_id AND p.version = m.v ORDER BY p.probe_id"
        ).fetchall()
        return [_probe_from_row(row) for row in rows]

    def probe_history(self, probe_id: str) -> list[ProbeConfig]:
        rows = self._db.execute(
            "SELECT * FROM probe_configs WHERE probe_id = ? ORDER BY version",
            (probe_id,)).fetchall()
        return [_probe_from_row(row) for row in rows]


def _entry_from_row(row: sqlite3.Row) -> CatalogEntry:
    meta = TraceFileMeta(
        file_name=row["file_name"], probe_id=row["probe_id"], link_id=row["link_id"],
        t_start=parse_iso(row["t_start"]), t_end=parse_iso(row["t_end"]),
        packet_count=row["packet_count"], byte_count=row["byte_count"],
        lost_packets=row["lost_packets"], anonymized=bool(row["anonymized"]),
        state=FileState(row["state"]))
    return CatalogEntry(meta=meta, tier=row["tier"],
                        ingested_at=parse_iso(row["ingested_at"]),
                        file_present=bool(row["file_present"]),
                        pinned=bool(row["pinned"]))


def _probe_from_row(row: sqlite3.Row) -> ProbeConfig:
    return ProbeConfig(probe_id=row["probe_id"], hardware_desc=row["hardware"],
                       software_desc=row["software"], link_id=row["link_id"],
                       link_bandwidth_bps=row["bandwidth_bps"], version=row["version"])
