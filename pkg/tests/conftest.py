import itertools
import math

import numpy as np
import pytest

from quasihyp import LpSpace, restrict

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def unit_square():
    return restrict(LpSpace(2, 2), [[0, 0], [1, 0], [1, 1], [0, 1]])


def brute_c0(d):
    """Reference maximum of the four-point ratio, written as plain loops."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    best = -math.inf
    for i, j, k, l in itertools.product(range(n), repeat=4):
        s1 = d[i, j] + d[k, l]
        den = max(d[i, k] + d[j, l], d[i, l] + d[j, k])
        if den > 0:
            best = max(best, s1 / den)
    return best


def brute_delta(d):
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    best = 0.0
    for i, j, k, l in itertools.product(range(n), repeat=4):
        slack = d[i, j] + d[k, l] - max(d[i, k] + d[j, l], d[i, l] + d[j, k])
        best = max(best, slack)
    return best / 2.0


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: [float(x) if x != "inf" else math.inf for x in k.split("/")]):
        terminalreporter.write_line(RESULTS[key])
