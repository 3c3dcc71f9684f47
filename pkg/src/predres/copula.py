"""Recursive Gaussian-copula dependence machinery.

Correlation between margins is tracked through recursively updated second
moments of the Gaussian scores. Two update rules are supported:

* variant A rescales the squared increment by the current second moments
  (the pairs carry non-unit variances that are divided out),
* variant B averages raw squares/products, so after any number of updates
  the state equals the plain pooled averages of everything seen.

Both keep the derived correlation inside [-1, 1] by Cauchy-Schwarz. The
multivariate state is the matrix form of variant A; draws come from a
Cholesky factor of the correlation matrix with a small escalating diagonal
jitter as the safety net.

The scalar arithmetic here is deliberately written so that the d = 2
matrix recursion reproduces the bivariate variant-A recursion bit for bit
(e.g. sqrt(a*a) == a exactly in round-to-nearest), and the hand-rolled
Cholesky keeps draws free of BLAS-dependent rounding.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, NumericalError
from .rng import next_standard_normal

# |r| this close to 1 is treated as exactly 1 before sqrt(1 - r^2).
_UNIT_R_TOL = 1e-15

_JITTER_START = 1e-12
_JITTER_LIMIT = 1e-8


@dataclass(frozen=True)
class BivariateCopulaState:
    """Second-moment recursion state for one margin pair.

    m2_x, m2_y are the recursive second moments, m_xy the cross moment,
    step the number of pairs absorbed so far.
    """

    variant: str
    m2_x: float
    m2_y: float
    m_xy: float
    step: int

    def __post_init__(self):
        if self.variant not in ("A", "B"):
            raise ValueError(f"variant must be 'A' or 'B', got {self.variant!r}")
        if self.step < 1:
            raise ValueError("step must be >= 1")


@dataclass(frozen=True)
class MultiCopulaState:
    """Matrix form of the variant-A recursion for d margins."""

    second_moments: np.ndarray
    step: int

    @property
    def d(self):
        return self.second_moments.shape[0]


def bivariate_init(x_scores, y_scores, variant="B"):
    """Start the recursion from two equal-length Gaussian-score vectors."""
    x = np.asarray(x_scores, dtype=float)
    y = np.asarray(y_scores, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("score vectors must be 1-d with equal length")
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 score pairs, got {n}")
    m2_x = float(np.mean(x * x))
    m2_y = float(np.mean(y * y))
    m_xy = float(np.mean(x * y))
    if m2_x <= 0.0 or m2_y <= 0.0:
        raise DegeneracyError("degenerate scores: zero second moment")
    return BivariateCopulaState(variant, m2_x, m2_y, m_xy, n)


def update_bivariate(state, x, y):
    """Absorb one new score pair; returns the successor state."""
    x = float(x)
    y = float(y)
    m = state.step
    denom = m + 1.0
    a = m / denom
    b = 1.0 / denom
    if state.variant == "A":
        m2_x = a * state.m2_x + b * (state.m2_x * x * x)
        m2_y = a * state.m2_y + b * (state.m2_y * y * y)
        coef = math.sqrt(state.m2_x * state.m2_y)
        m_xy = a * state.m_xy + b * (coef * x * y)
    else:
        m2_x = a * state.m2_x + b * (x * x)
        m2_y = a * state.m2_y + b * (y * y)
        m_xy = a * state.m_xy + b * (x * y)
    return BivariateCopulaState(state.variant, m2_x, m2_y, m_xy, m + 1)


def _clamp_unit(r):
    if abs(r - 1.0) <= _UNIT_R_TOL:
        return 1.0
    if abs(r + 1.0) <= _UNIT_R_TOL:
        return -1.0
    return r


def correlation(state):
    """Current correlation m_xy / sqrt(m2_x * m2_y), clamped into [-1, 1]."""
    if state.m2_x <= 0.0 or state.m2_y <= 0.0:
        raise DegeneracyError("zero variance: correlation undefined")
    r = state.m_xy / math.sqrt(state.m2_x * state.m2_y)
    r = _clamp_unit(r)
    if abs(r) > 1.0:
        raise NumericalError(f"correlation {r!r} escaped [-1, 1]")
    return r


def sample_pair(state, stream):
    """Draw one score pair with the state's current correlation.

    x is a standard normal and y = r*x + sqrt(1-r^2)*z for an independent
    standard normal z; |r| = 1 degenerates to y = +/-x, which is allowed.
    """
    r = correlation(state)
    z1 = next_standard_normal(stream)
    z2 = next_standard_normal(stream)
    s = 1.0 - r * r
    if s < 0.0:
        s = 0.0
    return z1, r * z1 + math.sqrt(s) * z2


def multi_init(score_matrix):
    """Start the matrix recursion from an n x d Gaussian-score matrix.

    The initial second-moment matrix must be non-singular (this is what
    guarantees positive definiteness of every later correlation matrix),
    so rank-deficient score matrices are rejected.
    """
    scores = np.asarray(score_matrix, dtype=float)
    if scores.ndim != 2:
        raise ValueError("score matrix must be 2-d (rows = observations)")
    n, d = scores.shape
    if d < 2:
        raise ValueError(f"need at least 2 columns, got {d}")
    if n < d:
        raise DegeneracyError(f"need at least d={d} rows for a non-singular start, got {n}")
    s = np.empty((d, d))
    for k in range(d):
        for h in range(k, d):
            v = float(np.mean(scores[:, k] * scores[:, h]))
            s[k, h] = v
            s[h, k] = v
    eigs = np.linalg.eigvalsh(s)
    if eigs[0] <= 0.0 or eigs[0] <= eigs[-1] * 1e-12:
        raise DegeneracyError("singular initial second-moment matrix")
    return MultiCopulaState(s, n)


def multi_update(state, x_vector):
    """Absorb one new score vector; returns the successor state.

    Entry (k, h) gets the increment sqrt(S_kk * S_hh) * x_k * x_h, computed
    once per unordered pair and mirrored, so the matrix stays exactly
    symmetric.
    """
    x = np.asarray(x_vector, dtype=float)
    d = state.d
    if x.shape != (d,):
        raise ValueError(f"expected a vector of length {d}, got shape {x.shape}")
    old = state.second_moments
    m = state.step
    denom = m + 1.0
    a = m / denom
    b = 1.0 / denom
    new = np.empty((d, d))
    for k in range(d):
        xk = x[k]
        for h in range(k, d):
            coef = math.sqrt(old[k, k] * old[h, h])
            v = a * old[k, h] + b * (coef * xk * x[h])
            new[k, h] = v
            new[h, k] = v
    return MultiCopulaState(new, m + 1)


def correlation_matrix(state):
    """Correlation matrix R_kh = S_kh / sqrt(S_kk * S_hh), unit diagonal.

    The computed diagonal is checked to be 1 within 1e-14 and then pinned
    to exactly 1; off-diagonals within 1e-15 of +/-1 are clamped like the
    bivariate case.
    """
    s = state.second_moments
    d = state.d
    if np.any(np.diag(s) <= 0.0):
        raise DegeneracyError("zero variance on the diagonal: correlation undefined")
    r = np.empty((d, d))
    for k in range(d):
        for h in range(k, d):
            v = s[k, h] / math.sqrt(s[k, k] * s[h, h])
            if k == h:
                if abs(v - 1.0) > 1e-14:
                    raise NumericalError(f"correlation diagonal drifted to {v!r}")
                v = 1.0
            else:
                v = _clamp_unit(v)
                if abs(v) > 1.0:
                    raise NumericalError(f"correlation {v!r} escaped [-1, 1]")
            r[k, h] = v
            r[h, k] = v
    return r


def _cholesky_lower(a):
    """Lower Cholesky factor, or None on a nonpositive pivot."""
    d = a.shape[0]
    lower = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1):
            acc = a[i, j]
            for k in range(j):
                acc -= lower[i, k] * lower[j, k]
            if i == j:
                if acc <= 0.0:
                    return None
                lower[i, i] = math.sqrt(acc)
            else:
                lower[i, j] = acc / lower[j, j]
    return lower


def cholesky_with_jitter(matrix, counters=None):
    """Factor a correlation matrix, escalating diagonal jitter on failure.

    Jitter starts at 1e-12 and grows tenfold up to 1e-8; every retry is
    counted on ``counters.jitter_events`` when a counter object is given.
    Raises NumericalError when even the largest jitter fails.
    """
    lower = _cholesky_lower(matrix)
    if lower is not None:
        return lower
    eps = _JITTER_START
    eye = np.eye(matrix.shape[0])
    while eps <= _JITTER_LIMIT:
        if counters is not None:
            counters.jitter_events += 1
        lower = _cholesky_lower(matrix + eps * eye)
        if lower is not None:
            return lower
        eps *= 10.0
    raise NumericalError("correlation matrix not factorizable even with jitter 1e-8")


def sample_vector(state, stream, counters=None):
    """Draw one score vector with the state's current correlation matrix."""
    r = correlation_matrix(state)
    lower = cholesky_with_jitter(r, counters)
    d = state.d
    z = [next_standard_normal(stream) for _ in range(d)]
    out = np.empty(d)
    for i in range(d):
        acc = 0.0
        for k in range(i + 1):
            acc += lower[i, k] * z[k]
        out[i] = acc
    return out
