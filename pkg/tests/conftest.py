import re

CRITERIA = {
    1: "geometry anchors",
    2: "sampling anchor",
    3: "propagation suite",
    4: "gradient correctness",
    5: "desk-scale convergence",
    6: "viewer consistency",
    7: "eyebox uniformity",
    8: "JOD suite",
    9: "parallax detection rate",
    10: "I/O round trips",
}

_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)$")
_results = {}


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.failed or report.skipped:
        prev = _results.get(k)
        if prev in ("FAIL",):
            return
        if report.failed:
            _results[k] = "FAIL"
        elif report.skipped:
            _results[k] = "SKIP"
        elif report.when == "call":
            _results[k] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in CRITERIA.items():
        if k in _results:
            terminalreporter.write_line(f"criterion {k:2d} {_results[k]}: {name}")
