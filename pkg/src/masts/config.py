"""Service/operator configuration, loaded from one TOML file.

The anonymization key travels as a file path here and never as a command
line argument (process listings leak).  Retention lifetimes may be given per
tier in seconds, with ``"unbounded"`` for no expiry.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .catalog import DEFAULT_LIFETIMES, RetentionPolicy

CONFIG_ENV_VAR = "MASTS_CONFIG"

DEFAULT_AUP_TEXT = """\
Acceptable Use Policy

1. Data obtained from this archive may be used for research purposes only.
2. The source of the data must be acknowledged in any published work.
3. No attempt may be made to reverse the address anonymisation or to
   identify individual users from the data.
4. Data may not be redistributed to third parties.
"""


@dataclass
class ServiceConfig:
    """Everything the access service and pipeline tools need to run."""

    archive_root: Path = Path("archive")
    listen_host: str = "127.0.0.1"
    listen_port: int = 8321
    key_path: Path | None = None
    aup_path: Path | None = None
    db_path: Path | None = None
    retention: RetentionPolicy = field(default_factory=RetentionPolicy)
    rate_limit_per_min: int = 10
    session_ttl_seconds: float = 86400.0
    grant_ttl_seconds: float = 300.0
    max_series_bins: int = 2_000_000

    def aup_text(self) -> str:
        if self.aup_path is not None:
            return Path(self.aup_path).read_text()
        return DEFAULT_AUP_TEXT


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Read the TOML config; falls back to $MASTS_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return ServiceConfig()
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    config = ServiceConfig()
    if "archive_root" in data:
        config.archive_root = Path(data["archive_root"])
    listen = data.get("listen", {})
    config.listen_host = listen.get("host", config.listen_host)
    config.listen_port = int(listen.get("port", config.listen_port))
    if "key_path" in data:
        config.key_path = Path(data["key_path"])
    if "aup_path" in data:
        config.aup_path = Path(data["aup_path"])
    if "db_path" in data:
        config.db_path = Path(data["db_path"])
    service = data.get("service", {})
    config.rate_limit_per_min = int(service.get("rate_limit_per_min",
                                                config.rate_limit_per_min))
    config.session_ttl_seconds = float(service.get("session_ttl_seconds",
                                                   config.session_ttl_seconds))
    config.grant_ttl_seconds = float(service.get("grant_ttl_seconds",
                                                 config.grant_ttl_seconds))
    if "retention" in data:
        lifetimes = dict(DEFAULT_LIFETIMES)
        quota = data["retention"].pop("pinned_sample_quota", 4)
        for tier, value in data["retention"].items():
            lifetimes[tier] = None if value == "unbounded" else float(value)
        config.retention = RetentionPolicy(lifetimes=lifetimes,
                                           pinned_sample_quota=int(quota))
    return config
