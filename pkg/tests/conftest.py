import os

import pytest
from hypothesis import HealthCheck, settings

from cellmorph import corpus
from cellmorph.pipeline import encode_corpus

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PROGRAMS = list(corpus.CORPUS)


@pytest.fixture(scope="session")
def encoded():
    cache = {}

    def get(name, conf=None):
        key = (name, repr(conf))
        if key not in cache:
            cache[key] = encode_corpus(name, conf)
        return cache[key]
    return get


# -- acceptance summary: one line per criterion --------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        rec = _CRITERIA.setdefault(m.args[0], {"passed": 0, "failed": [], "skipped": []})
        if call.excinfo is None:
            rec["passed"] += 1
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            rec["skipped"].append(item.name)
        else:
            rec["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        rec = _CRITERIA[n]
        status = "FAIL" if rec["failed"] else ("PASS" if rec["passed"] else "SKIP")
        line = f"criterion {n}: {status} ({rec['passed']} passed"
        if rec["failed"]:
            line += f", failed: {', '.join(rec['failed'])}"
        if rec["skipped"]:
            line += f", skipped: {', '.join(rec['skipped'])}"
        tr.write_line(line + ")")
