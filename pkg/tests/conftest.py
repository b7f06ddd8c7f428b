import pytest

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Record one part of an acceptance criterion: ``record(ac, passed, detail)``."""
    def record(ac, passed, detail):
        ACCEPTANCE.setdefault(ac, []).append((bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(ACCEPTANCE, key=lambda a: int(a[2:])):
        parts = ACCEPTANCE[ac]
        ok = all(p for p, _ in parts)
        detail = " | ".join(d for _, d in parts)
        terminalreporter.write_line(f"{ac} {'PASS' if ok else 'FAIL'}  {detail}")
