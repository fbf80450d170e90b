from __future__ import annotations

from pathlib import Path

import pytest

from gridiron.catalog import load_catalog_file
from gridiron.config import EngineConfig
from gridiron.engine import Engine

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES_DIR = REPO_ROOT / "fixtures"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(criterion): spec acceptance criterion test"
    )


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def catalog():
    return load_catalog_file(FIXTURES_DIR / "catalog.jsonl")


@pytest.fixture()
def make_engine(tmp_path):
    """Engine factory with an isolated state dir per call."""
    counter = {"n": 0}

    def factory(**overrides) -> Engine:
        counter["n"] += 1
        state_dir = tmp_path / f"state{counter['n']}"
        config = EngineConfig(
            fixtures_dir=str(FIXTURES_DIR), state_dir=str(state_dir), **overrides
        )
        return Engine(config)

    return factory


@pytest.fixture()
def engine(make_engine) -> Engine:
    return make_engine()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            item_markers = getattr(report, "keywords", {})
            if "acceptance" not in item_markers:
                continue
            label = report.nodeid.split("::")[-1]
            status = "PASS" if outcome == "passed" else "FAIL"
            lines[label] = status
    if lines:
        terminalreporter.section("acceptance criteria")
        for label in sorted(lines):
            terminalreporter.write_line(f"{lines[label]:4s}  {label}")
