import pytest

_ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    crit = item.get_closest_marker("criterion")
    if crit is None or call.when != "call":
        return
    num, title = crit.args
    if call.excinfo is None:
        ok = True
    else:
        ok = False
    prev = _ACCEPTANCE.get(num, (title, True))
    _ACCEPTANCE[num] = (title, prev[1] and ok)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def pm1():
    from ladderepoch import symmetric_pm1
    return symmetric_pm1()


@pytest.fixture(scope="session")
def biased():
    from ladderepoch import biased_pm1
    return biased_pm1(0.0)
