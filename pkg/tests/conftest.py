"""Terminal summary: one PASS/FAIL line per acceptance criterion."""

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        # a later phase never upgrades a failure
        prev = _ACCEPTANCE.get(report.nodeid)
        if prev != "failed":
            _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE):
        name = nodeid.split("::")[-1]
        verdict = "PASS" if _ACCEPTANCE[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{name}: {verdict}")
