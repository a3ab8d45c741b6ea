import pytest

# Verdict lines collected by the acceptance suite, echoed in the terminal summary.
VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title}"
        if detail:
            line += f" ({detail})"
        VERDICTS.append(line)
        print(line, flush=True)

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
