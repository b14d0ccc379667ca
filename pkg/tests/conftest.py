"""Per-criterion PASS/FAIL summary for the acceptance suite."""

from collections import defaultdict

_criterion_of: dict[str, int] = {}
_failed: dict[int, list[str]] = defaultdict(list)
_seen: set[int] = set()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


def pytest_collection_modifyitems(session, config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criterion_of[item.nodeid] = int(mark.args[0])


def pytest_runtest_logreport(report):
    n = _criterion_of.get(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.failed:
        _seen.add(n)
    if report.failed:
        _failed[n].append(report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _seen:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_seen):
        if _failed[n]:
            terminalreporter.write_line(f"Criterion {n}: FAIL ({', '.join(sorted(set(_failed[n])))})")
        else:
            terminalreporter.write_line(f"Criterion {n}: PASS")
