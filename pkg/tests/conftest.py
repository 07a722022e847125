import math

import numpy as np
import pytest

from lanetrack.probmap_io import ProbabilityMap


def gaussian_map(width=800, height=288, centre=400.0, sigma=3.0, peak=0.9, slope=0.0, top=0):
    """Single-channel map with a straight Gaussian lane x = centre + slope*(y - height + 1)."""
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    xc = centre + slope * (ys - (height - 1))
    d = (xs - xc) / math.hypot(1.0, slope)
    v = peak * np.exp(-0.5 * (d / sigma) ** 2)
    v[:top] = 0.0
    return ProbabilityMap(v.astype(np.float32))


@pytest.fixture
def vertical_lane():
    return gaussian_map()


# -- acceptance summary ----------------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    n, title = mark.args
    rec = _criteria.setdefault(n, {"title": title, "ok": True, "tests": 0})
    rec["tests"] += 1
    if call.excinfo is not None:
        rec["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        rec = _criteria[n]
        status = "PASS" if rec["ok"] else "FAIL"
        tr.write_line(f"criterion {n:2d}: {status}  {rec['title']} ({rec['tests']} checks)")
