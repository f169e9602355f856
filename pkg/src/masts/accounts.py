"""User registration, AUP acceptance, sessions, and download grants.

Access rules follow the five user/organisation categories: the operator, the
data-holding site, project members, external packet-data users, and external
summary-data users.  Packet-level data needs a registered user of a packet
category who has accepted the acceptable-use policy; summary data is open.

State lives in the same sqlite database as the catalog (one single-writer
store per archive); passwords are stored as salted PBKDF2 verifiers, never
plaintext, and every AUP acceptance is appended to an immutable event log.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path

from .errors import (AupRequired, CategoryForbidden, FileExpired, UnknownUser,
                     UsernameTaken)
from .timefmt import iso_utc, parse_iso, utc_now

_PBKDF2_ITERATIONS = 60_000


class UserCategory(str, Enum):
    OPERATOR = "operator"
    HOST_SITE = "host_site"
    PROJECT_MEMBER = "project_member"
    EXTERNAL_PACKET = "external_packet"
    EXTERNAL_SUMMARY = "external_summary"


# Summary data is open to every category; packet data is denied only to
# external summary users (and gated on the AUP for everyone).
PACKET_CATEGORIES = frozenset(UserCategory) - {UserCategory.EXTERNAL_SUMMARY}


@dataclass(frozen=True)
class User:
    username: str
    category: UserCategory
    aup_accepted_at: datetime | None
    aup_version: str | None

    @property
    def aup_accepted(self) -> bool:
        return self.aup_accepted_at is not None


@dataclass(frozen=True)
class DownloadGrant:
    grant_id: str
    username: str
    file_name: str
    issued_at: datetime
    expires_at: datetime


_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    username        TEXT PRIMARY KEY,
    salt            BLOB NOT NULL,
    verifier        BLOB NOT NULL,
    category        TEXT NOT NULL,
    aup_accepted_at TEXT,
    aup_version     TEXT
);
CREATE TABLE IF NOT EXISTS sessions (
    token      TEXT PRIMARY KEY,
    username   TEXT NOT NULL,
    expires_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS grants (
    grant_id   TEXT PRIMARY KEY,
    username   TEXT NOT NULL,
    file_name  TEXT NOT NULL,
    issued_at  TEXT NOT NULL,
    expires_at TEXT NOT NULL,
    used       INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS events (
    event_id  INTEGER PRIMARY KEY AUTOINCREMENT,
    username  TEXT NOT NULL,
    kind      TEXT NOT NULL,
    at        TEXT NOT NULL,
    detail    TEXT NOT NULL
);
"""


class UserStore:
    """Accounts, sessions, grants and the audit event log, sqlite-backed."""

    def __init__(self, db_path: str | Path,
                 session_ttl: float = 86400.0, grant_ttl: float = 300.0) -> None:
        self.session_ttl = session_ttl
        self.grant_ttl = grant_ttl
        self._lock = threading.Lock()
        self._db = sqlite3.connect(db_path, check_same_thread=False)
        self._db.row_factory = sqlite3.Row
        with self._lock, self._db:
            self._db.executescript(_SCHEMA)

    def close(self) -> None:
        self._db.close()

    # -- registration and AUP --------------------------------------------------

    def register(self, username: str, password: str,
                 category: UserCategory) -> User:
        """Create a user pending AUP acceptance; usernames are unique."""
        if not username:
            raise ValueError("empty username")
        salt = secrets.token_bytes(16)
        verifier = _derive(password, salt)
        with self._lock, self._db:
            try:
                self._db.execute(
                    "INSERT INTO users VALUES (?,?,?,?,NULL,NULL)",
                    (username, salt, verifier, category.value))
            except sqlite3.IntegrityError as exc:
                raise UsernameTaken(username) from exc
            self._log(username, "registered", category.value)
        return self.user(username)

    def accept_aup(self, username: str, aup_version: str,
                   now: datetime | None = None) -> User:
        """Record AUP acceptance; idempotent, the first timestamp wins."""
        now = now or utc_now()
        with self._lock, self._db:
            row = self._db.execute(
                "SELECT aup_accepted_at FROM users WHERE username = ?",
                (username,)).fetchone()
            if row is None:
                raise UnknownUser(username)
            if row["aup_accepted_at"] is None:
                self._db.execute(
                    "UPDATE users SET aup_accepted_at = ?, aup_version = ? "
                    "WHERE username = ?", (iso_utc(now), aup_version, username))
                self._log(username, "aup_accepted", aup_version, at=now)
        return self.user(username)

    def user(self, username: str) -> User:
        row = self._db.execute(
            "SELECT * FROM users WHERE username = ?", (username,)).fetchone()
        if row is None:
            raise UnknownUser(username)
        accepted = row["aup_accepted_at"]
        return User(username=row["username"], category=UserCategory(row["category"]),
                    aup_accepted_at=parse_iso(accepted) if accepted else None,
                    aup_version=row["aup_version"])

    # -- sessions ----------------------------------------------------------------

    def authenticate(self, username: str, password: str) -> bool:
        row = self._db.execute(
            "SELECT salt, verifier FROM users WHERE username = ?",
            (username,)).fetchone()
        if row is None:
            return False
        return hmac.compare_digest(_derive(password, row["salt"]), row["verifier"])

    def create_session(self, username: str, password: str,
                       now: datetime | None = None) -> tuple[str, datetime] | None:
        """Bearer token and expiry on success, None on bad credentials."""
        if not self.authenticate(username, password):
            return None
        now = now or utc_now()
        token = secrets.token_urlsafe(32)
        expires = now + timedelta(seconds=self.session_ttl)
        with self._lock, self._db:
            self._db.execute("INSERT INTO sessions VALUES (?,?,?)",
                             (token, username, iso_utc(expires)))
        return token, expires

    def session_user(self, token: str, now: datetime | None = None) -> User | None:
        now = now or utc_now()
        row = self._db.execute(
            "SELECT username, expires_at FROM sessions WHERE token = ?",
            (token,)).fetchone()
        if row is None or parse_iso(row["expires_at"]) <= now:
            return None
        try:
            return self.user(row["username"])
        except UnknownUser:
            return None

    # -- download grants -----------------------------------------------------------

    def authorize_download(self, username: str, file_name: str, file_present: bool,
                           now: datetime | None = None) -> DownloadGrant:
        """Issue a single-use grant, or raise the exact refusal.

        Category is checked before the AUP gate: a summary-only user is
        refused outright, not invited to accept the AUP.
        """
        user = self.user(username)
        if user.category not in PACKET_CATEGORIES:
            raise CategoryForbidden(f"{user.category.value} users get summary data only")
        if not user.aup_accepted:
            raise AupRequired(username)
        if not file_present:
            raise FileExpired(file_name)
        now = now or utc_now()
        grant = DownloadGrant(
            grant_id=secrets.token_urlsafe(16), username=username,
            file_name=file_name, issued_at=now,
            expires_at=now + timedelta(seconds=self.grant_ttl))
        with self._lock, self._db:
            self._db.execute(
                "INSERT INTO grants VALUES (?,?,?,?,?,0)",
                (grant.grant_id, grant.username, grant.file_name,
                 iso_utc(grant.issued_at), iso_utc(grant.expires_at)))
            self._log(username, "grant_issued", file_name, at=now)
        return grant

    def redeem_grant(self, grant_id: str, now: datetime | None = None) -> bool:
        """Atomically consume a grant; False when unknown, used, or expired."""
        now = now or utc_now()
        with self._lock, self._db:
            cursor = self._db.execute(
                "UPDATE grants SET used = 1 "
                "WHERE grant_id = ? AND used = 0 AND expires_at > ?",
                (grant_id, iso_utc(now)))
            return cursor.rowcount == 1

    # -- audit log --------------------------------------------------------------

    def _log(self, username: str, kind: str, detail: str,
             at: datetime | None = None) -> None:
        self._db.execute(
            "INSERT INTO events (username, kind, at, detail) VALUES (?,?,?,?)",
            (username, kind, iso_utc(at or utc_now()), detail))

    def events(self, username: str | None = None,
               kind: str | None = None) -> list[dict]:
        clauses, params = [], []
        if username is not None:
            clauses.append("username = ?")
            params.append(username)
        if kind is not None:
            clauses.append("kind = ?")
            params.append(kind)
        sql = "SELECT * FROM events"
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY event_id"
        return [dict(row) for row in self._db.execute(sql, params)]


def _derive(password: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode(), salt, _PBKDF2_ITERATIONS)
