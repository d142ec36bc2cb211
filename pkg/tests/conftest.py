import re

import pytest

_OUTCOME = {}
_DETAIL = {}
_NAME = re.compile(r"test_criterion_(\d+)")
_MONOTONE_RUNS = []  # max violation of every completed monotone run in the session
SUITE_SLACK = 1e-12


def pytest_configure(config):
    # record every monotone run made anywhere in the suite
    from competition import coexist, logistic

    original = logistic.monotone_iterate

    def recorded(*args, **kwargs):
        run = original(*args, **kwargs)
        _MONOTONE_RUNS.append(run.max_violation)
        return run

    logistic.monotone_iterate = recorded
    coexist.monotone_iterate = recorded


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the acceptance criterion of this test."""
    m = _NAME.match(request.node.name)

    def _note(text):
        _DETAIL[int(m.group(1))] = text

    return _note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _NAME.match(item.name)
    if m is None:
        return
    n = int(m.group(1))
    if rep.when == "call" or (rep.failed and rep.when == "setup"):
        _OUTCOME[n] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOME:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    suite_worst = max(_MONOTONE_RUNS, default=0.0)
    for n in sorted(_OUTCOME):
        ok = _OUTCOME[n]
        detail = _DETAIL.get(n, "")
        if n == 5:
            ok = ok and suite_worst <= SUITE_SLACK
            detail += f"; suite-wide {len(_MONOTONE_RUNS)} runs, worst {suite_worst:.2e}"
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
