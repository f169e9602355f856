from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

TEST_KEY = bytes(range(32))


@pytest.fixture
def test_key() -> bytes:
    return TEST_KEY


@pytest.fixture
def key_file(tmp_path: Path) -> Path:
    path = tmp_path / "anon.key"
    path.write_text(TEST_KEY.hex() + "\n")
    return path
