import pytest

from robust_resolve.families import LocationFamily


@pytest.fixture(scope="session")
def normal():
    return LocationFamily.normal()


@pytest.fixture(scope="session")
def laplace():
    return LocationFamily.laplace()


@pytest.fixture(scope="session")
def logistic():
    return LocationFamily.logistic()


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(number, title, checks, elapsed=None):
        failed = [label for label, ok in checks if not ok]
        timing = "" if elapsed is None else f" ({elapsed:.1f} s)"
        line = f"criterion {number:>2} {'PASS' if not failed else 'FAIL'}: {title}{timing}"
        if failed:
            line += " | failed: " + "; ".join(failed)
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
