import sys
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]

coord = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


@st.composite
def polylines(draw, dim=2, min_vertices=2, max_vertices=6):
    """Vertex arrays of polylines whose segments are all longer than 1e-2."""
    n = draw(st.integers(min_vertices, max_vertices))
    v = np.array(draw(st.lists(st.lists(coord, min_size=dim, max_size=dim), min_size=n, max_size=n)))
    for i in range(1, n):
        if np.linalg.norm(v[i] - v[i - 1]) < 1e-2:
            v[i, 0] += 0.5
    return v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary --------------------------------------------------------

_ACCEPTANCE: list[tuple[str, str, float]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _ACCEPTANCE.append((mark.args[0], "PASS" if rep.passed else "FAIL", rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict, dur in sorted(_ACCEPTANCE, key=lambda x: int(x[0].split(".")[0])):
        terminalreporter.write_line(f"[{verdict}] {label} ({dur:.1f}s)")
