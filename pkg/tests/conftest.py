import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from risopt.config import RisSpec, ScenarioConfig  # noqa: E402
from risopt.em_model import assemble_impedances, build_grid_scenario  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def default_iset():
    """Default 14 x 14 scenario at 3.5 GHz."""
    return assemble_impedances(build_grid_scenario(ScenarioConfig()))


@pytest.fixture(scope="session")
def small_iset():
    """2 x 3 RIS with the default element and antenna geometry."""
    return assemble_impedances(build_grid_scenario(ScenarioConfig(ris=RisSpec(2, 3))))


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("RIS_OPT_CACHE_DIR", str(tmp_path / "cache"))


CRITERIA_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def _report(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
