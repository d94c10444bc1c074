import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_classes(pos, r, k_core):
    """Reference classification straight from pairwise distances."""
    d = np.linalg.norm(pos[:, None] - pos[None], axis=2)
    nb = (d <= r) & ~np.eye(len(pos), dtype=bool)
    core = nb.sum(axis=1) >= k_core
    cls = np.ones(len(pos), dtype=np.uint8)  # outlier
    cls[core] = 0
    frontier = ~core & (nb & core[None]).any(axis=1) & (nb & ~core[None]).any(axis=1)
    cls[frontier] = 2
    return cls


CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion; returns the verdict."""

    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
