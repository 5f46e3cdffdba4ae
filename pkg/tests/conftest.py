"""Collects one verdict line per acceptance criterion and prints them at the end of the run."""

VERDICTS: dict[int, str] = {}


def record(number: int, name: str, passed: bool, detail: str) -> None:
    VERDICTS[number] = f"criterion {number} ({name}): {'PASS' if passed else 'FAIL'} | {detail}"
    print(VERDICTS[number])


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
