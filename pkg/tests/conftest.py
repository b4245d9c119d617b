import pytest

CRITERIA: dict[int, tuple[str, bool]] = {}


@pytest.fixture
def criterion():
    """Record an acceptance verdict; the summary is printed at the end of the run."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        CRITERIA[number] = (f"{title}{': ' + detail if detail else ''}", bool(ok))
        assert ok, f"criterion {number} failed: {title} {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        text, ok = CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}  {text}")
