import pytest

# criterion number -> (title, {test id: outcome})
_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or report.outcome != "passed":
        checks = _ACCEPTANCE.setdefault(number, (title, {}))[1]
        if checks.get(item.name, "passed") == "passed":
            checks[item.name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, checks = _ACCEPTANCE[number]
        bad = [name for name, outcome in checks.items() if outcome != "passed"]
        status = "PASS" if not bad else "FAIL"
        line = f"AC{number} {status}  {title} ({len(checks) - len(bad)}/{len(checks)} checks)"
        if bad:
            line += "  failing: " + ", ".join(bad)
        terminalreporter.write_line(line)
