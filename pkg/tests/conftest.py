import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed at the end."""
    mod = None
    for name, m in sys.modules.items():
        if name.rsplit(".", 1)[-1] == "test_acceptance":
            mod = m
            break
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        label, status, dt = results[num]
        terminalreporter.write_line(
            "criterion %2d %s  %s (%.1fs)" % (num, status, label, dt))
