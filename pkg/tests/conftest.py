"""Shared test plumbing.

The acceptance tests register one PASS/FAIL line per criterion here so the
summary appears at the end of the pytest run even with output capture on.
"""

ACCEPTANCE_LINES = []


def record_criterion(number: int, name: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    line = f"criterion {number:2d} {name}: {tag}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
