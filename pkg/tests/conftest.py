"""Shared independent oracles used across the test modules.

These deliberately re-derive quantities through routes different from the
implementation under test (bisection instead of rational approximations,
interval scans instead of binary search) so each check has two independent
paths to the same number.
"""

import numpy as np
import pytest


def bisect_quantile(cdf, p, lo=-40.0, hi=40.0, iters=200):
    """Invert a scalar CDF by plain bisection."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ogive_cdf_scan(values, x):
    """Piecewise-linear predictive CDF by scanning every interval.

    Independent of the binary-search implementation: walks all m+1
    intervals between consecutive order statistics (sentinels 0 and 1) and
    accumulates the indicator formula directly.
    """
    vals = np.sort(np.asarray(values, dtype=float))
    m = vals.size
    edges = np.concatenate([[0.0], vals, [1.0]])
    if x >= 1.0:
        return 1.0
    total = 0.0
    for j in range(1, m + 2):
        lo, hi = edges[j - 1], edges[j]
        if lo <= x < hi:
            total = (j - 1) + (x - lo) / (hi - lo)
            break
    return total / (m + 1)


@pytest.fixture
def rng_np():
    return np.random.default_rng(20260810)
