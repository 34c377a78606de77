import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from topofunnel import synthetic  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def scenario(tmp_path_factory):
    return synthetic.generate(tmp_path_factory.mktemp("scenario"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
