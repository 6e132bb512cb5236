import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from present_cema.synth import SynthConfig, synthesize_set  # noqa: E402

KEY = 0x0123456789ABCDEF1357


@pytest.fixture
def key():
    return KEY


@pytest.fixture(scope="session")
def small_set():
    return synthesize_set(64, KEY, SynthConfig(samples_per_trace=512, first_leak_offset=64,
                                               leak_spacing=48, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    ok = _CRITERIA.get(n, (title, True))[1] and not rep.failed
    _CRITERIA[n] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")
