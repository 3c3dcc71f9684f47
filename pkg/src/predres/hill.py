"""Hill's one-step-ahead predictive model on the unit interval.

The predictive places mass 1/(m+1) on each interval between successive
order statistics of the current sample (with sentinels at 0 and 1), uniform
within an interval, which makes the predictive CDF the cumulative frequency
polygon (ogive). This module maintains the ordered sample, evaluates the
CDF and its inverse, draws and inserts new points, and provides the
Polya-urn resampler as the discrete baseline.

Two storage backends sit behind one interface: a plain sorted array
(binary search + O(m) insert, fastest for short horizons) and a
``sortedcontainers.SortedList`` order-statistic tree for horizons of 1e5
and beyond.
"""

import bisect
from collections import Counter

import numpy as np
from sortedcontainers import SortedList

from .errors import DomainError, NumericalError, TieError
from .rng import next_uniform


class _ArrayBackend:
    __slots__ = ("_xs",)

    def __init__(self, xs):
        self._xs = list(xs)

    def __len__(self):
        return len(self._xs)

    def __getitem__(self, i):
        return self._xs[i]

    def __iter__(self):
        return iter(self._xs)

    def bisect_left(self, x):
        return bisect.bisect_left(self._xs, x)

    def bisect_right(self, x):
        return bisect.bisect_right(self._xs, x)

    def add(self, x):
        bisect.insort(self._xs, x)

    def to_array(self):
        return np.asarray(self._xs, dtype=float)


class _TreeBackend:
    __slots__ = ("_xs",)

    def __init__(self, xs):
        self._xs = SortedList(xs)

    def __len__(self):
        return len(self._xs)

    def __getitem__(self, i):
        return self._xs[i]

    def __iter__(self):
        return iter(self._xs)

    def bisect_left(self, x):
        return self._xs.bisect_left(x)

    def bisect_right(self, x):
        return self._xs.bisect_right(x)

    def add(self, x):
        self._xs.add(x)

    def to_array(self):
        return np.fromiter(self._xs, dtype=float, count=len(self._xs))


_BACKENDS = {"array": _ArrayBackend, "tree": _TreeBackend}


class HillState:
    """Strictly increasing sample on (0, 1) with implicit sentinels 0 and 1.

    A state belongs to a single trajectory; it is mutated in place by
    :func:`insert` and must not be shared across threads.
    """

    __slots__ = ("_values", "clamp_events")

    def __init__(self, backend, clamp_events=0):
        self._values = backend
        self.clamp_events = clamp_events

    @property
    def m(self):
        return len(self._values)

    @property
    def values(self):
        """Copy of the ordered sample as a numpy array."""
        return self._values.to_array()

    def __repr__(self):
        return f"HillState(m={self.m})"


def hill_init(data, backend="array"):
    """Build a HillState from values in (0, 1).

    Values exactly at 0 or 1 are clamped inward by one representable step
    (the sentinels must stay strict bounds) and counted in
    ``state.clamp_events``; values outside [0, 1] raise DomainError and
    duplicates raise TieError. An empty sample is allowed and represents
    the uniform predictive.
    """
    try:
        cls = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}, expected 'array' or 'tree'")
    xs = []
    clamps = 0
    for v in data:
        x = float(v)
        if not 0.0 <= x <= 1.0 or x != x:
            raise DomainError(f"data value {x!r} outside [0, 1]")
        if x == 0.0:
            x = np.nextafter(0.0, 1.0)
            clamps += 1
        elif x == 1.0:
            x = np.nextafter(1.0, 0.0)
            clamps += 1
        xs.append(x)
    xs.sort()
    for a, b in zip(xs, xs[1:]):
        if a == b:
            raise TieError(f"duplicate value {a!r}; transform or jitter the data")
    return HillState(cls(xs), clamp_events=clamps)


def _interval(values, k):
    """Endpoints of interval k (0-based), sentinels included."""
    m = len(values)
    lo = 0.0 if k == 0 else values[k - 1]
    hi = 1.0 if k == m else values[k]
    return lo, hi


def predictive_cdf(state, x):
    """Probability that the next draw is <= x.

    Piecewise linear with m+1 pieces, continuous, strictly increasing; at
    the j-th order statistic it equals j/(m+1) exactly. The value at x = 1
    is taken to be 1 by continuity.
    """
    x = float(x)
    if not 0.0 <= x <= 1.0 or x != x:
        raise DomainError(f"cdf argument {x!r} outside [0, 1]")
    if x == 1.0:
        return 1.0
    values = state._values
    m = len(values)
    k = values.bisect_right(x)
    lo, hi = _interval(values, k)
    return (k + (x - lo) / (hi - lo)) / (m + 1)


def _quantile_interval(state, u):
    """Inverse-CDF point together with its interval endpoints."""
    values = state._values
    m = len(values)
    t = u * (m + 1)
    piece = int(np.ceil(t))
    if piece < 1:
        piece = 1
    elif piece > m + 1:
        piece = m + 1
    lo, hi = _interval(values, piece - 1)
    x = lo + (hi - lo) * (t - (piece - 1))
    return x, lo, hi


def predictive_quantile(state, u):
    """Inverse of :func:`predictive_cdf` for u strictly inside (0, 1)."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile argument {u!r} outside (0, 1)")
    x, _, _ = _quantile_interval(state, u)
    # Last-resort clamps: keep the result inside the open unit interval
    # even when u sits within one ulp of an endpoint.
    if x <= 0.0:
        x = np.nextafter(0.0, 1.0)
    elif x >= 1.0:
        x = np.nextafter(1.0, 0.0)
    return x

def _nearest_free(state, x):
    """Closest representable point in (0, 1) not already stored.

    Walks outward one ulp at a time, alternating up/down. Collisions are
    probability-zero events mathematically, so shifting them by a few ulps
    leaves the sampling law untouched while keeping draws insertable.
    """
    values = state._values

    def is_free(v):
        if not 0.0 < v < 1.0:
            return False
        k = values.bisect_left(v)
        return not (k < len(values) and values[k] == v)

    if is_free(x):
        return x
    up = down = x
    for _ in range(64):
        up = np.nextafter(up, 1.0)
        if is_free(up):
            return up
        down = np.nextafter(down, 0.0)
        if is_free(down):
            return down
    raise NumericalError(f"no free representable point near {x!r}")


def quantile_sample(state, u):
    """Inverse-CDF draw for a caller-supplied uniform, kept insertable.

    When the computed point rounds onto an interval endpoint (or an
    interval has no representable interior at all), the draw moves to the
    nearest free float instead.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile argument {u!r} outside (0, 1)")
    x, lo, hi = _quantile_interval(state, u)
    if lo < x < hi and 0.0 < x < 1.0:
        return x
    if x < lo:
        x = lo
    elif x > hi:
        x = hi
    return _nearest_free(state, x)


def sample_next(state, stream):
    """Draw the next observation from the predictive.

    One uniform is inverted through the piecewise-linear CDF (identical in
    law to choosing an interval with probability 1/(m+1) and drawing
    uniformly inside it, but consumes a single variate).
    """
    while True:
        u = next_uniform(stream)
        if u != 0.0:
            return quantile_sample(state, u)


def insert(state, x):
    """Add a new value to the ordered sample, in place; returns the state."""
    x = float(x)
    if not 0.0 < x < 1.0 or x != x:
        raise DomainError(f"insert value {x!r} outside (0, 1)")
    values = state._values
    k = values.bisect_left(x)
    if k < len(values) and values[k] == x:
        raise TieError(f"value {x!r} already present")
    values.add(x)
    return state


def insert_many(state, xs):
    """Insert a batch of values; O(k log(m + k)) with the tree backend."""
    for x in xs:
        insert(state, x)
    return state


def empirical_cdf(state, x):
    """Fraction of stored values <= x (0 for the empty state)."""
    m = state.m
    if m == 0:
        return 0.0
    return state._values.bisect_right(float(x)) / m


def moment(state, r):
    """r-th raw moment of the empirical distribution, (1/m) * sum(x^r)."""
    r = int(r)
    if r < 1:
        raise ValueError(f"moment order must be >= 1, got {r}")
    if state.m == 0:
        raise ValueError("moment of an empty state is undefined")
    arr = state.values
    return float(np.sum(arr ** r) / arr.size)


def predictive_moment(state, r):
    """Exact E[X^r] of the next draw under the piecewise-uniform predictive.

    Integrates x^r over each inter-order-statistic interval in closed form;
    the empty state gives the uniform moment 1/(r+1).
    """
    r = int(r)
    if r < 1:
        raise ValueError(f"moment order must be >= 1, got {r}")
    m = state.m
    full = np.empty(m + 2)
    full[0] = 0.0
    full[1:-1] = state.values
    full[-1] = 1.0
    widths = np.diff(full)
    power_diffs = np.diff(full ** (r + 1))
    return float(np.sum(power_diffs / widths) / ((r + 1) * (m + 1)))


class UrnState:
    """Multiset of support values; the predictive is uniform over it."""

    __slots__ = ("_values",)

    def __init__(self, values):
        vals = [float(v) for v in values]
        if not vals:
            raise ValueError("urn must start nonempty")
        self._values = vals

    @property
    def total(self):
        return len(self._values)

    @property
    def counts(self):
        return Counter(self._values)

    @property
    def values(self):
        return np.asarray(self._values, dtype=float)

    def __repr__(self):
        return f"UrnState(total={self.total})"


def urn_init(data):
    """Build an UrnState from observed values (ties allowed)."""
    return UrnState(data)


def urn_sample_next(state, stream):
    """Uniform draw over the current multiset."""
    n = len(state._values)
    idx = int(next_uniform(stream) * n)
    if idx >= n:
        idx = n - 1
    return state._values[idx]


def urn_insert(state, x):
    """Add one occurrence of x to the urn, in place; returns the state."""
    state._values.append(float(x))
    return state
