import os
from collections import defaultdict

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA = {
    1: "exact recovery without quantisation",
    2: "Example 1 reproduction",
    3: "sparse partial-DFT sweep agreement",
    4: "quantiser error statistics",
    5: "interference variances and ETF coherence",
    6: "nonsparsity crossover",
    7: "noise-folding plateau",
    8: "Bernoulli small-K correction",
    9: "IHT and Bayesian cross-validation",
    10: "floating-point equivalence",
    11: "property suite",
}

_outcomes = defaultdict(list)
_notes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def report(request):
    marker = request.node.get_closest_marker("criterion")
    n = marker.args[0] if marker else None

    def add(text):
        _notes[n].append(text)

    return add


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    n = getattr(report, "criterion", None)
    if n is not None:
        _outcomes[n].append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, desc in CRITERIA.items():
        if n not in _outcomes:
            continue
        status = "PASS" if all(_outcomes[n]) else "FAIL"
        tr.write_line(f"criterion {n:>2}: {status}  {desc}")
        for note in _notes.get(n, []):
            tr.write_line(f"    {note}")
