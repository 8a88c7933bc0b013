"""Per-criterion reporting for the acceptance suite.

Tests tagged ``@pytest.mark.acceptance(n, "title")`` are grouped by
criterion; a criterion passes only if every test in its group passes.
"""

import pytest

_results: dict = {}
_titles: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            number, title = mark.args
            _titles[number] = title
            _results.setdefault(number, [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results[mark.args[0]].append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        runs = _results[number]
        if not runs:
            status = "NOT RUN"
        else:
            status = "PASS" if all(ok for _, ok in runs) else "FAIL"
        line = f"criterion {number:>2}: {status:<7} {_titles[number]}"
        failed = [name for name, ok in runs if not ok]
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        terminalreporter.write_line(line)
