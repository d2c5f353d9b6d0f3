import numpy as np
import pytest

from resgap.design import TargetGaps
from resgap.limit_model import ResonatorSpec, UnitCellModel


def loguniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def random_model(rng, m=None, n=None):
    """Valid model with log-uniform resonator parameters."""
    m = m or int(rng.integers(1, 9))
    n = n or int(rng.integers(2, 4))
    while True:
        res = tuple(
            ResonatorSpec(h=loguniform(rng, 0.1, 10), eta=loguniform(rng, 0.1, 10),
                          d_profile_measure=loguniform(rng, 0.1, 10),
                          b_volume=loguniform(rng, 1e-2, 1))
            for _ in range(m)
        )
        try:
            return UnitCellModel(n=n, resonators=res, b0_volume=loguniform(rng, 1e-2, 1))
        except Exception:  # pragma: no cover - duplicate alphas are measure zero
            continue


def random_targets(rng, m=None):
    """Interlacing endpoints drawn log-uniform in [1e-2, 1e2] and sorted."""
    m = m or int(rng.integers(1, 9))
    while True:
        pts = np.sort(loguniform(rng, 1e-2, 1e2, 2 * m))
        if np.all(np.diff(pts) > 0):
            return TargetGaps(tuple(pts[0::2]), tuple(pts[1::2]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
