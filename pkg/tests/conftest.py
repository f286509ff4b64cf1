import pytest

from tractorquant.symbols import is_registered, register_field


@pytest.fixture(scope="session", autouse=True)
def test_fields():
    """Auxiliary vector and 2-tensor fields used by the algebra tests."""
    for name, rank, sym in (("u", 1, "none"), ("v", 1, "none"), ("T", 2, "none")):
        if not is_registered(name):
            register_field(name, rank, symmetry=sym)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, title = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {title}")
