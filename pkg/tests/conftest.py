"""Per-criterion PASS/FAIL summary for the acceptance suite.

Tests tagged ``@pytest.mark.criterion(n, "label")`` are grouped by ``n``;
a criterion passes when every test tagged with it passed. An optional
``variant="..."`` keyword splits one criterion into separately reported
readings, which are listed after the overall status.
"""

import pytest

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, label): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when != "call" and not rep.failed:
        return
    n, label = marker.args
    entry = _results.setdefault(n, {"label": label, "passed": True, "variants": {}})
    variant = marker.kwargs.get("variant")
    if variant is not None:
        entry["variants"].setdefault(variant, True)
    if rep.failed:
        entry["passed"] = False
        if variant is not None:
            entry["variants"][variant] = False


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        entry = _results[n]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = "; ".join(f"{v}: {'PASS' if ok else 'FAIL'}" for v, ok in entry["variants"].items())
        suffix = f" [{detail}]" if detail else ""
        terminalreporter.write_line(f"criterion {n} ({entry['label']}): {status}{suffix}")
