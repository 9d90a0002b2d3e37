import math

import numpy as np
import pytest

from gravidec.geometry import preset_instrument
from gravidec.gw_background import GwBackground

HYPER_BAND = (2 * math.pi * 1e-6, 2 * math.pi * 1e-4)


@pytest.fixture(scope="session")
def hyper():
    return preset_instrument("hyper-cs")


@pytest.fixture(scope="session")
def hyper_bg():
    return GwBackground.flat(1e-34, HYPER_BAND)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------- acceptance summary

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "failed": []})
    if call.excinfo is not None:
        entry["ok"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        extra = "" if e["ok"] else f"  (failing: {', '.join(e['failed'])})"
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}{extra}")
