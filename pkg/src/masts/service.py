"""HTTP dissemination service: search, gated trace download, open summaries.

Authorization happens entirely server-side.  Summary routes (throughput
series, distinct-source counts) are world-readable and never carry an IP
address; trace downloads require a session, a packet-data category, an
accepted AUP, and a still-present file, in that order of refusal.  Each
successful download consumes exactly one single-use grant and ships the ERF
file together with its metadata sidecar in one zip so provenance travels
with the data.
"""

from __future__ import annotations

import hashlib
import io
import math
import threading
import time
import zipfile
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from typing import Iterator

from fastapi import Depends, FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import erf
from .accounts import User, UserCategory, UserStore
from .capture import sidecar_name
from .catalog import Catalog, CatalogEntry
from .config import ServiceConfig
from .errors import (AupRequired, BadWindow, CategoryForbidden, FileExpired,
                     UnknownUser, UsernameTaken)
from .headers import parse_headers
from .series import pad_bins, timeseries, write_series_csv
from .timefmt import iso_utc, parse_iso


class RegisterBody(BaseModel):
    username: str
    password: str
    category: UserCategory


class AupBody(BaseModel):
    version: str | None = None


class SessionBody(BaseModel):
    username: str
    password: str


@dataclass
class TokenBucket:
    """Per-user rate limiter for the archive read path."""

    per_minute: int
    _state: dict[str, tuple[float, float]] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def allow(self, key: str) -> bool:
        now = time.monotonic()
        with self._lock:
            tokens, last = self._state.get(key, (float(self.per_minute), now))
            tokens = min(self.per_minute, tokens + (now - last) * self.per_minute / 60.0)
            if tokens < 1.0:
                self._state[key] = (tokens, now)
                return False
            self._state[key] = (tokens - 1.0, now)
            return True


def _entry_json(entry: CatalogEntry) -> dict:
    data = entry.meta.to_json_dict()
    data.update(tier=entry.tier, ingested_at=iso_utc(entry.ingested_at),
                file_present=entry.file_present, pinned=entry.pinned)
    return data


def _parse_when(text: str | None, name: str) -> datetime | None:
    if text is None:
        return None
    try:
        return parse_iso(text)
    except ValueError as exc:
        raise HTTPException(400, f"bad {name} timestamp: {text!r}") from exc


def create_app(config: ServiceConfig, catalog: Catalog | None = None,
               store: UserStore | None = None) -> FastAPI:
    """Build the service around one archive root.

    ``catalog`` and ``store`` default to the sqlite database inside the
    archive root; hand them in explicitly to share connections with tests.
    """
    catalog = catalog or Catalog(config.archive_root, config.db_path)
    store = store or UserStore(catalog.db_path, session_ttl=config.session_ttl_seconds,
                               grant_ttl=config.grant_ttl_seconds)
    aup_text = config.aup_text()
    aup_version = hashlib.sha256(aup_text.encode()).hexdigest()[:12]
    bucket = TokenBucket(per_minute=config.rate_limit_per_min)

    app = FastAPI(title="trace archive access service")
    # The browser UI is served from elsewhere; authorization is all
    # token-based, so a permissive CORS policy is safe here.
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.catalog = catalog
    app.state.store = store

    def current_user(request: Request) -> User | None:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            return None
        return store.session_user(header[7:].strip())

    def require_user(request: Request) -> User:
        user = current_user(request)
        if user is None:
            raise HTTPException(401, "authentication required")
        return user

    # -- users and sessions ----------------------------------------------------

    @app.post("/users", status_code=201)
    def register(body: RegisterBody) -> dict:
        try:
            user = store.register(body.username, body.password, body.category)
        except UsernameTaken:
            raise HTTPException(409, f"username {body.username!r} is taken")
        return _user_json(user)

    @app.post("/users/{username}/aup")
    def accept_aup(username: str, body: AupBody,
                   user: User = Depends(require_user)) -> dict:
        if user.username != username:
            raise HTTPException(403, "may only accept the AUP for yourself")
        version = body.version or aup_version
        try:
            updated = store.accept_aup(username, version)
        except UnknownUser:
            raise HTTPException(404, f"no user {username!r}")
        return _user_json(updated)

    @app.get("/aup")
    def get_aup() -> dict:
        return {"version": aup_version, "text": aup_text}

    @app.post("/sessions")
    def login(body: SessionBody) -> dict:
        result = store.create_session(body.username, body.password)
        if result is None:
            raise HTTPException(401, "bad username or password")
        token, expires = result
        return {"token": token, "expires_at": iso_utc(expires)}

    # -- metadata ---------------------------------------------------------------

    @app.get("/probes")
    def probes() -> list[dict]:
        return [{"probe_id": p.probe_id, "hardware": p.hardware_desc,
                 "software": p.software_desc, "link_id": p.link_id,
                 "link_bandwidth_bps": p.link_bandwidth_bps, "version": p.version}
                for p in catalog.probes()]

    @app.get("/traces")
    def search(probe: str | None = None, link: str | None = None,
               t_from: str | None = Query(None, alias="from"),
               t_to: str | None = Query(None, alias="to"),
               tier: str | None = None) -> list[dict]:
        try:
            entries = catalog.search(probe=probe, link=link,
                                     t_from=_parse_when(t_from, "from"),
                                     t_to=_parse_when(t_to, "to"), tier=tier)
        except BadWindow as exc:
            raise HTTPException(400, str(exc))
        return [_entry_json(entry) for entry in entries]

    # -- trace download -----------------------------------------------------------

    @app.get("/traces/{file_name}/download")
    def download(file_name: str, user: User = Depends(require_user)) -> Response:
        entry = catalog.entry(file_name)
        if entry is None:
            raise HTTPException(404, f"no trace file {file_name!r}")
        if not bucket.allow(user.username):
            raise HTTPException(429, "download rate limit reached")
        try:
            grant = store.authorize_download(user.username, file_name,
                                             entry.file_present)
        except CategoryForbidden as exc:
            raise HTTPException(403, f"CategoryForbidden: {exc}")
        except AupRequired:
            raise HTTPException(403, "AupRequired: accept the AUP first")
        except FileExpired:
            raise HTTPException(410, f"trace file {file_name!r} has expired; "
                                     "metadata remains available")
        if not store.redeem_grant(grant.grant_id):
            raise HTTPException(410, "download grant already used or expired")
        path = catalog.trace_path(entry)
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.write(path, arcname=file_name)
            sidecar = path.parent / sidecar_name(file_name)
            if sidecar.is_file():
                archive.write(sidecar, arcname=sidecar.name)
        return Response(content=buffer.getvalue(), media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{file_name}.zip"'})

    # -- open summary data ---------------------------------------------------------

    def window_records(link: str, t_from: datetime,
                       t_to: datetime) -> Iterator[erf.TraceRecord]:
        lo = erf.ErfTimestamp.from_datetime(t_from).raw
        hi = erf.ErfTimestamp.from_datetime(t_to).raw
        for entry in catalog.search(link=link, t_from=t_from, t_to=t_to):
            if not entry.file_present:
                continue
            for rec in erf.read_records(catalog.trace_path(entry)):
                if lo <= rec.ts.raw < hi:
                    yield rec

    def summary_window(t_from: str | None, t_to: str | None,
                       link: str | None) -> tuple[str, datetime, datetime]:
        if link is None or t_from is None or t_to is None:
            raise HTTPException(400, "link, from and to are required")
        start = _parse_when(t_from, "from")
        end = _parse_when(t_to, "to")
        if start > end:
            raise HTTPException(400, "window start after end")
        return link, start, end

    @app.get("/summary/throughput")
    def throughput(link: str | None = None,
                   t_from: str | None = Query(None, alias="from"),
                   t_to: str | None = Query(None, alias="to"),
                   bin: str = "0.001") -> Response:
        link_id, start, end = summary_window(t_from, t_to, link)
        try:
            width = Fraction(bin)
            if width <= 0:
                raise ValueError
        except (ValueError, ZeroDivisionError):
            raise HTTPException(400, f"bad bin width {bin!r}")
        bins = math.ceil((end - start).total_seconds() / width)
        if bins > config.max_series_bins:
            raise HTTPException(400, f"window needs {bins} bins, "
                                     f"limit is {config.max_series_bins}")
        series = timeseries(window_records(link_id, start, end), width,
                            t0=erf.ErfTimestamp.from_datetime(start))
        pad_bins(series, bins)
        out = io.StringIO()
        write_series_csv(series, out)
        return Response(content=out.getvalue(), media_type="text/csv")

    @app.get("/summary/sources")
    def sources(link: str | None = None,
                t_from: str | None = Query(None, alias="from"),
                t_to: str | None = Query(None, alias="to")) -> dict:
        """Distinct source address count: the count only, never addresses."""
        link_id, start, end = summary_window(t_from, t_to, link)
        seen: set[int] = set()
        for rec in window_records(link_id, start, end):
            summary = parse_headers(rec.frame)
            if summary.src_ip is not None:
                seen.add(summary.src_ip)
        return {"link": link_id, "from": iso_utc(start), "to": iso_utc(end),
                "distinct_sources": len(seen)}

    return app


def _user_json(user: User) -> dict:
    return {"username": user.username, "category": user.category.value,
            "aup_accepted_at": iso_utc(user.aup_accepted_at)
            if user.aup_accepted_at else None,
            "aup_version": user.aup_version}


def run_service(config: ServiceConfig) -> None:
    """Blocking entry point used by the CLI ``serve`` subcommand."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_host, port=config.listen_port,
                log_level="warning")
