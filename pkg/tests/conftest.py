import pytest

from acflab import fixtures


@pytest.fixture(scope="session")
def capacitor():
    return fixtures.capacitor_fixture(1 / 128)


@pytest.fixture(scope="session")
def zigzag():
    return fixtures.zigzag_fixture(1 / 256)


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = []
    for mod in list(sys.modules.values()):
        lines.extend(getattr(mod, "ACCEPTANCE_LINES", ()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
