import pytest

from kbinary import literals


@pytest.fixture(scope="session")
def exceptional():
    return literals.exceptional_example()


_RESULTS = {}


@pytest.fixture(scope="session")
def acceptance_results():
    return _RESULTS


def pytest_terminal_summary(terminalreporter):
    lines = sorted((k, v) for k, v in _RESULTS.items() if isinstance(k, int))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, (ok, detail) in lines:
        terminalreporter.write_line("criterion %d: %s  %s" % (num, "PASS" if ok else "FAIL", detail))
