"""Print one PASS/FAIL line per acceptance criterion at the end of the run."""

_ACCEPTANCE = "test_acceptance.py::"
_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if _ACCEPTANCE not in report.nodeid:
        return
    name = report.nodeid.split("::", 1)[1]
    if report.failed:
        _results[name] = "FAIL"
    elif report.when == "call" and name not in _results:
        _results[name] = "PASS" if report.passed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _results.items():
        terminalreporter.write_line(f"{outcome} {name}")
    passed = sum(v == "PASS" for v in _results.values())
    terminalreporter.write_line(f"{passed}/{len(_results)} criteria passed")
