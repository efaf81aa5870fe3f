import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"


@pytest.fixture
def systems_dir():
    return SYSTEMS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
