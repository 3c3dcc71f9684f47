"""Maps between the data scale and the unit interval, plus Gaussian scores.

Unbounded data go through the logistic bijection, data on a known bounded
interval through an affine map, and data already inside (0, 1) pass through
untouched. ``gaussian_scores`` is the rank transform that seeds the copula
recursions: value with rank r among n maps to the normal quantile of
r/(n+1).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, TieError
from .special import expit, logit, normal_quantile


@dataclass(frozen=True)
class TransformSpec:
    """Bijection selector: identity, logit (logistic pair), or affine(lo, hi)."""

    kind: str
    lo: Optional[float] = None
    hi: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("identity", "logit", "affine"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "affine":
            if self.lo is None or self.hi is None:
                raise ValueError("affine transform needs lo and hi")
            if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
                raise ValueError(f"affine bounds must be finite with lo < hi, got ({self.lo}, {self.hi})")
        elif self.lo is not None or self.hi is not None:
            raise ValueError(f"{self.kind} transform takes no bounds")


IDENTITY = TransformSpec("identity")
LOGIT = TransformSpec("logit")


def to_unit(spec, x):
    """Map data-scale values into the unit interval.

    Identity accepts [0, 1], affine accepts [lo, hi] (endpoints land on
    0/1 and are clamped downstream by the sampler), logit accepts any
    finite real.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"non-finite data value in {x!r}")
    if spec.kind == "identity":
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("identity transform requires values in [0, 1]")
        out = arr.copy()
    elif spec.kind == "logit":
        out = np.asarray(expit(arr))
    else:
        if np.any(arr < spec.lo) or np.any(arr > spec.hi):
            raise DomainError(f"value outside affine domain [{spec.lo}, {spec.hi}]")
        out = (arr - spec.lo) / (spec.hi - spec.lo)
    return float(out) if np.ndim(x) == 0 else out


def from_unit(spec, u):
    """Inverse of :func:`to_unit`."""
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"non-finite unit value in {u!r}")
    if spec.kind == "identity":
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("unit values must lie in [0, 1]")
        out = arr.copy()
    elif spec.kind == "logit":
        out = np.asarray(logit(arr))
    else:
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("unit values must lie in [0, 1]")
        out = spec.lo + arr * (spec.hi - spec.lo)
    return float(out) if np.ndim(u) == 0 else out


def choose_transform(data):
    """Default policy: identity if every value already sits in (0, 1), else logit."""
    arr = np.asarray(data, dtype=float)
    if arr.size and np.all(arr > 0.0) and np.all(arr < 1.0):
        return IDENTITY
    return LOGIT


def parse_transform(text):
    """Parse a CLI transform spec: auto, identity, logit, or affine:lo:hi.

    Returns None for 'auto' (resolved against the data later).
    """
    if text == "auto":
        return None
    if text == "identity":
        return IDENTITY
    if text == "logit":
        return LOGIT
    if text.startswith("affine:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"affine transform must be affine:lo:hi, got {text!r}")
        try:
            lo, hi = float(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"affine bounds must be numbers, got {text!r}")
        return TransformSpec("affine", lo, hi)
    raise ValueError(f"unknown transform {text!r}")


def gaussian_scores(data):
    """Rank-based normal scores: rank r among n maps to Phi^{-1}(r/(n+1)).

    Mirrored ranks (r and n+1-r) get exact negations of each other, so the
    score set is exactly symmetric about 0 and an odd middle rank is
    exactly 0. Ties are rejected.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("gaussian_scores expects a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite value in score data")
    n = arr.size
    order = np.argsort(arr, kind="stable")
    srt = arr[order]
    if np.any(srt[1:] == srt[:-1]):
        raise TieError("tied values have no unique ranks; jitter or transform first")
    ranks = np.empty(n, dtype=np.intp)
    ranks[order] = np.arange(1, n + 1)

    by_rank = np.zeros(n + 1)
    half = np.arange(1, n // 2 + 1)
    if half.size:
        low = np.asarray(normal_quantile(half / (n + 1.0)))
        by_rank[half] = low
        by_rank[n + 1 - half] = -low
    # odd n: middle rank keeps the exact 0 from the zeros-init
    return by_rank[ranks]
