import numpy as np
import pytest
from hypothesis import settings

from fidtloc import PointSet

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_pointset(rng, max_side=64, max_points=20, min_points=0):
    h, w = (int(v) for v in rng.integers(1, max_side + 1, size=2))
    n = int(rng.integers(min_points, max_points + 1))
    pts = np.c_[rng.uniform(0, w, n), rng.uniform(0, h, n)]
    # uniform(0, w) can return w itself after float rounding
    pts = np.minimum(pts, [w - 1e-6, h - 1e-6])
    return PointSet(w, h, pts)


def separated_pointset(rng, w, h, n, gap=2):
    """Integer points whose pairwise Chebyshev distance is at least ``gap``."""
    chosen = []
    for _ in range(n * 50):
        if len(chosen) == n:
            break
        x, y = int(rng.integers(0, w)), int(rng.integers(0, h))
        if all(max(abs(x - a), abs(y - b)) >= gap for a, b in chosen):
            chosen.append((x, y))
    return PointSet(w, h, np.array(chosen, dtype=float).reshape(-1, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py" in rep.nodeid:
                lines.append((rep.nodeid.split("::")[-1], outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {name}")
