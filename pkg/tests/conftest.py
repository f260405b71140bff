from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


def corpus_files(suffix: str = ".proof") -> list[Path]:
    return sorted(DATA.glob(f"*{suffix}"))


def corpus_inputs() -> dict[str, list[list[int]]]:
    """Program/input pairs of the corpus, keyed by file stem (or file name
    for non-proof files)."""
    return json.loads((DATA / "inputs.json").read_text())


# acceptance lines, filled by test_acceptance and printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
