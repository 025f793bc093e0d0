import pytest

from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_report = rep


@pytest.fixture
def criterion(request):
    """Dict a criterion test fills with ``number``, ``title`` and ``detail``."""
    entry = {"number": 0, "title": request.node.name, "detail": ""}
    yield entry
    rep = getattr(request.node, "call_report", None)
    passed = rep is not None and rep.passed
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {entry['number']:>2}: {entry['title']}"
    if entry["detail"]:
        line += f" -- {entry['detail']}"
    print(line)
    _CRITERIA.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
