from __future__ import annotations

import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def pilot() -> dict:
    return json.loads((FIXTURES / "pilot.json").read_text())


@pytest.fixture(scope="session")
def rng_golden() -> dict:
    return json.loads((FIXTURES / "rng_42_7.json").read_text())
