import re

import pytest

_LINES = {}


def _order(number):
    m = re.match(r"(\d+)(.*)", str(number))
    return int(m.group(1)), m.group(2)


@pytest.fixture
def acceptance(request):
    """record(number, ok, detail): one pass/fail line per acceptance criterion."""
    key = request.node.name

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[key] = (_order(number), line)
        print(line)
        return ok

    yield record
    if key not in _LINES:
        _LINES[key] = ((99, ""), f"criterion ??: FAIL  {key} raised before recording")


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES.values()):
        terminalreporter.write_line(line)
