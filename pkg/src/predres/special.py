"""Standard normal CDF/quantile and the logistic transform pair.

All functions accept scalars or numpy arrays and are pure. The quantile is
pinned to the CDF by one Halley refinement step, so the two are mutually
consistent inverses to near machine precision (the raw rational
approximation alone drifts to ~1e-8 in the tails of a round trip).
"""

import numpy as np
from scipy import special as _sp

from .errors import DomainError

_SQRT2 = float(np.sqrt(2.0))
_INV_SQRT_2PI = 1.0 / float(np.sqrt(2.0 * np.pi))


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr


def normal_cdf(x):
    """Standard normal CDF, absolute error below 1e-12.

    Evaluated through the complementary error function on the side that
    avoids cancellation, so both tails keep full relative accuracy.
    """
    arr = _as_float_array(x, "normal_cdf argument")
    lower = 0.5 * _sp.erfc(-arr / _SQRT2)
    upper = 1.0 - 0.5 * _sp.erfc(arr / _SQRT2)
    out = np.where(arr <= 0.0, lower, upper)
    return float(out) if np.ndim(x) == 0 else out


def _halley_step(x, q):
    """One Halley iteration toward Phi(x) = q; returns (x', correction)."""
    cdf = 0.5 * _sp.erfc(-x / _SQRT2)
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = (cdf - q) / pdf
        step = 2.0 * d / (2.0 + d * x)
    # Where the density underflows (|x| ~ 38) the seed is already the best
    # available; keep it.
    ok = pdf > 1e-280
    return np.where(ok, x - step, x), np.where(ok, d, 0.0)


def normal_quantile(p):
    """Standard normal quantile for p strictly inside (0, 1).

    Rational approximation seed (scipy's ndtri) polished by Halley steps
    against :func:`normal_cdf`. One step suffices in the body of the
    distribution; below q ~ 1e-14, where the seed's far-tail branch is only
    good to ~1e-3, up to two more steps are applied (only to the entries
    that need them). Relative error stays below 1e-9 on [1e-15, 1 - 1e-15]
    and the round trip with normal_cdf holds to 1e-8 out to |x| = 6.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"quantile argument must lie strictly in (0, 1), got {p!r}")
    # Reduce to the lower tail; 1 - p is exact for p >= 0.5.
    q = np.atleast_1d(np.minimum(arr, 1.0 - arr))
    x, d = _halley_step(_sp.ndtri(q), q)
    for _ in range(2):
        rough = np.abs(d) > 1e-8
        if not np.any(rough):
            break
        x_fix, d_fix = _halley_step(x[rough], q[rough])
        x = x.copy()
        d = d.copy()
        x[rough] = x_fix
        d[rough] = d_fix
    out = np.where(np.atleast_1d(arr) <= 0.5, x, -x)
    return float(out[0]) if np.ndim(p) == 0 else out.reshape(np.shape(p))


def expit(y):
    """Logistic function e^y / (1 + e^y), overflow-safe for any float."""
    arr = _as_float_array(y, "expit argument")
    z = np.exp(-np.abs(arr))
    out = np.where(arr >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))
    return float(out) if np.ndim(y) == 0 else out


def logit(x):
    """Inverse of :func:`expit`; requires x strictly inside (0, 1)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"logit argument must lie strictly in (0, 1), got {x!r}")
    # log(x) - log(1-x); log1p keeps accuracy for small x, and 1-x is exact
    # for x >= 0.5, so neither branch loses precision.
    out = np.log(arr) - np.log1p(-arr)
    return float(out) if np.ndim(x) == 0 else out
