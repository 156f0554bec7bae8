import pytest

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion n")


@pytest.fixture
def record(request):
    """Attach a one-line measurement summary to the current criterion."""
    marker = request.node.get_closest_marker("criterion")
    entry = _ACCEPTANCE.setdefault(marker.args[0], {"name": marker.args[1], "detail": []})

    def add(text):
        entry["detail"].append(str(text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    entry = _ACCEPTANCE.setdefault(marker.args[0], {"name": marker.args[1], "detail": []})
    entry["passed"] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[n]
        status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[e.get("passed")]
        detail = "; ".join(e["detail"])
        tr.write_line(f"[{status}] {n:2d}. {e['name']}" + (f"  ({detail})" if detail else ""))
