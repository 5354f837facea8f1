import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def report(number: int, title: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"[{number:>2}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
