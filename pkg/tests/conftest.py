import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = item.get_closest_marker("criterion")
    if label is None or rep.when != "call":
        return
    status = "PASS" if rep.passed else "FAIL"
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    line = f"[{status}] criterion {label.args[0]}: {label.args[1]}"
    if reporter is not None:
        reporter.write_line("")
        reporter.write_line(line)
    else:
        print(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported on one line")
