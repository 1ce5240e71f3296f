"""Shared pytest hooks: the acceptance suite prints one line per criterion."""

ACCEPTANCE = {}


def record(number: int, title: str, passed: bool, detail: str, seconds: float):
    ACCEPTANCE[number] = (title, passed, detail, seconds)
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}: {detail} ({seconds:.1f} s)")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, passed, detail, seconds = ACCEPTANCE[n]
        terminalreporter.write_line(
            f"criterion {n:2d} {'PASS' if passed else 'FAIL'}: {title}: {detail} ({seconds:.1f} s)"
        )
