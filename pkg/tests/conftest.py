import os

import numpy as np
import pytest
from hypothesis import settings

from hodgefast.connectivity import EdgeSet, FilterMatrix, percentile_mask

settings.register_profile("default", deadline=None, max_examples=50)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_edge_set(n, p, rng):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return EdgeSet(n, np.column_stack([iu[keep], ju[keep]]), 0.0)


def random_filter(n, rng, low_rank=False):
    """Uniform random filter, or |corr| of a rank-3 factor model (many triangles)."""
    if low_rank:
        f = rng.standard_normal((n, 3))
        v = np.abs(np.corrcoef(f))
    else:
        v = rng.random((n, n))
    v = np.triu(np.minimum(v, 1.0), 1)
    return FilterMatrix(v + v.T)


def random_mask(n, rng, top_percent=5.0, low_rank=False):
    return percentile_mask(random_filter(n, rng, low_rank), top_percent)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one "PASS|FAIL Cn ..." line per acceptance criterion, shown after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
