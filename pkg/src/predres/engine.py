"""Forward predictive-resampling engine.

Runs R independent trajectories from n observed points out to a horizon N,
computes a statistic on each completed synthetic data set (the first n
values being the observed data), and collects the per-run statistic values
as posterior draws. Schemes: the continuous predictive sampler on unit
data (hill-iid), the Polya-urn resampler (urn-iid), the closed-form normal
location model (normal-analytic), copula-coupled margins (bivariate,
multivariate), and synthetic-response least squares (regression).

Every run r owns the random stream (master_seed, r), so results are a pure
function of the configuration and independent of scheduling; parallel
execution merges results in run order.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import copula, hill
from .errors import DegeneracyError, InversionError, NumericalError, TieError
from .rng import RngStream, next_uniform
from .special import expit, logit, normal_cdf
from .transforms import TransformSpec, choose_transform, from_unit, gaussian_scores, to_unit

SCHEMES = (
    "hill-iid",
    "urn-iid",
    "normal-analytic",
    "bivariate",
    "multivariate",
    "regression",
)

_STATISTIC_KINDS = (
    "mean",
    "variance",
    "quantile",
    "beta-moments",
    "correlation",
    "ols-coefficients",
)

# Stream id reserved for the deterministic tie-breaking jitter; far above
# any plausible run index.
_JITTER_STREAM_ID = 2 ** 63

# Horizons at least this long get the order-statistic tree backend.
_TREE_BACKEND_HORIZON = 100_000

# Uniforms fed to the margin quantile are pinned inside this open range.
_U_EPS = 2.0 ** -53

_OLS_REFIT_PERIOD = 500
_OLS_REFIT_TOL = 1e-8


@dataclass(frozen=True)
class StatisticSpec:
    """Which statistic to read off each completed trajectory."""

    kind: str
    q: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _STATISTIC_KINDS:
            raise ValueError(f"unknown statistic {self.kind!r}")
        if self.kind == "quantile":
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ValueError(f"quantile level must lie in (0, 1), got {self.q!r}")
        elif self.q is not None:
            raise ValueError(f"{self.kind} statistic takes no level")


def parse_statistic(text):
    """Parse a CLI statistic spec such as 'mean' or 'quantile:0.5'."""
    if text.startswith("quantile:"):
        try:
            q = float(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad quantile level in {text!r}")
        return StatisticSpec("quantile", q)
    return StatisticSpec(text)


@dataclass(frozen=True)
class RunConfig:
    """Full description of one experiment; output is a pure function of it.

    horizon_n is the total trajectory length N and must be at least
    n_observed (N = n means zero forward steps: the statistic of the data
    itself, repeated per run).
    """

    n_observed: int
    horizon_n: int
    runs: int
    master_seed: int
    scheme: str
    variant: str = "B"
    transform: Optional[TransformSpec] = None
    statistic: StatisticSpec = StatisticSpec("mean")
    record_trajectory_every: Optional[int] = None
    jitter_ties: bool = False
    skip_failed: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_observed < 1:
            raise ValueError("need at least one observation")
        if self.horizon_n < self.n_observed:
            raise ValueError(
                f"horizon {self.horizon_n} below observed count {self.n_observed}"
            )
        if self.runs < 1:
            raise ValueError("need at least one run")
        if self.variant not in ("A", "B"):
            raise ValueError(f"variant must be 'A' or 'B', got {self.variant!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.record_trajectory_every is not None and self.record_trajectory_every < 1:
            raise ValueError("trajectory stride must be >= 1")


@dataclass
class PosteriorDraws:
    """Per-run statistic values at the horizon, plus bookkeeping.

    draws has one row per completed run (all of them unless skip_failed
    tolerated a few); trajectories, when recorded, holds
    (run, step, value) rows.
    """

    draws: np.ndarray
    columns: list
    trajectories: Optional[np.ndarray]
    diagnostics: dict


# ---------------------------------------------------------------------------
# statistics


def compute_statistic(spec, values):
    """Evaluate a statistic on completed values; returns a 1-d array.

    mean/variance/quantile/beta-moments expect a flat vector; correlation
    expects an (N, 2) matrix; ols-coefficients expects an (N, 1+p) matrix
    with the response in the first column. Variance uses the sample
    (ddof=1) convention. beta-moments returns (theta, sigma2, a, b) with
    a = theta*s, b = (1-theta)*s, s = theta*(1-theta)/sigma2 - 1.
    """
    arr = np.asarray(values, dtype=float)
    kind = spec.kind
    if kind == "correlation":
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValueError("correlation statistic needs an (N, 2) matrix")
        return np.array([float(np.corrcoef(arr[:, 0], arr[:, 1])[0, 1])])
    if kind == "ols-coefficients":
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ValueError("ols statistic needs an (N, 1+p) matrix, response first")
        y, x = arr[:, 0], arr[:, 1:]
        beta, *_ = np.linalg.lstsq(x, y, rcond=None)
        return beta
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{kind} statistic needs a nonempty vector")
    if kind == "mean":
        return np.array([float(np.mean(arr))])
    if kind == "quantile":
        return np.array([float(np.quantile(arr, spec.q))])
    if arr.size < 2:
        raise ValueError(f"{kind} statistic needs at least 2 values")
    if kind == "variance":
        return np.array([float(np.var(arr, ddof=1))])
    # beta-moments
    theta = float(np.mean(arr))
    sigma2 = float(np.var(arr, ddof=1))
    a, b = beta_from_moments(theta, sigma2)
    return np.array([theta, sigma2, a, b])


def beta_from_moments(theta, sigma2):
    """Invert beta mean/variance to shape parameters (a, b).

    Uses a = theta*s, b = (1-theta)*s with s = theta*(1-theta)/sigma2 - 1;
    raises InversionError when the implied s is not positive.
    """
    bound = theta * (1.0 - theta)
    if not 0.0 < theta < 1.0 or sigma2 <= 0.0:
        raise InversionError(f"beta inversion undefined for theta={theta}, sigma2={sigma2}")
    if sigma2 >= bound:
        raise InversionError(
            f"variance {sigma2} at or above theta*(1-theta)={bound}: implied s <= 0"
        )
    s = bound / sigma2 - 1.0
    return theta * s, (1.0 - theta) * s


def statistic_columns(spec, margins=None, dims=None, n_coef=None):
    """Column names for draws produced under the given statistic."""
    kind = spec.kind
    if kind == "correlation":
        if dims is None:
            return ["rho"]
        return [f"rho_{k + 1}{h + 1}" for k in range(dims) for h in range(k + 1, dims)]
    if kind == "ols-coefficients":
        return [f"beta_{j + 1}" for j in range(n_coef)]
    if kind == "mean":
        base = ["mean"]
    elif kind == "variance":
        base = ["variance"]
    elif kind == "quantile":
        base = [f"quantile_{spec.q:g}"]
    else:
        base = ["theta", "sigma2", "a", "b"]
    if margins is None:
        return base
    return [f"{prefix}_{name}" for prefix in margins for name in base]


def summarize(draws):
    """Per-column mean, sd, quantiles and Monte Carlo standard error.

    A single draw reports sd 0 and flags the MC standard error as
    unreliable. Quantile levels: 0.025, 0.25, 0.5, 0.75, 0.975.
    """
    arr = np.asarray(draws.draws, dtype=float)
    if arr.size == 0:
        raise ValueError("no draws to summarize")
    n = arr.shape[0]
    levels = [0.025, 0.25, 0.5, 0.75, 0.975]
    per_column = []
    for j, name in enumerate(draws.columns):
        col = arr[:, j]
        sd = float(np.std(col, ddof=1)) if n > 1 else 0.0
        per_column.append(
            {
                "name": name,
                "mean": float(np.mean(col)),
                "sd": sd,
                "mc_se": sd / math.sqrt(n),
                "quantiles": {str(q): float(np.quantile(col, q)) for q in levels},
            }
        )
    return {
        "runs": n,
        "columns": list(draws.columns),
        "per_column": per_column,
        "mc_se_reliable": n >= 2,
        "diagnostics": dict(draws.diagnostics),
    }


def normal_analytic_variance(n, horizon):
    """Closed-form variance of the final forward draw in the normal model.

    Equals 1 + sum_{i=n+1}^{horizon-1} 1/i^2 (the running mean contributes
    the sum, the final innovation the 1); the sum is empty at
    horizon = n + 1.
    """
    i = np.arange(n + 1, horizon, dtype=float)
    return 1.0 + float(np.sum(1.0 / (i * i)))


# ---------------------------------------------------------------------------
# data preparation


def _backend_for(horizon):
    return "tree" if horizon >= _TREE_BACKEND_HORIZON else "array"


def _clamp_open(arr):
    """Clamp exact 0/1 one representable step inward; returns (arr, count)."""
    arr = np.asarray(arr, dtype=float).copy()
    at_lo = arr == 0.0
    at_hi = arr == 1.0
    count = int(np.count_nonzero(at_lo) + np.count_nonzero(at_hi))
    if count:
        arr[at_lo] = np.nextafter(0.0, 1.0)
        arr[at_hi] = np.nextafter(1.0, 0.0)
    return arr, count


def _dedupe_unit(arr, master_seed, enabled):
    """Break ties on unit-scale data with a seeded jitter of magnitude 1e-12.

    Returns (array, number of values jittered). Raises TieError when ties
    exist and jittering is disabled (or cannot separate them).
    """
    arr = np.asarray(arr, dtype=float)
    n_jittered = 0
    stream = RngStream(master_seed, _JITTER_STREAM_ID)
    for _ in range(8):
        _, inverse, counts = np.unique(arr, return_inverse=True, return_counts=True)
        dup_mask = counts[inverse] > 1
        if not np.any(dup_mask):
            return arr, n_jittered
        if not enabled:
            raise TieError(
                f"{int(np.count_nonzero(dup_mask))} tied values; "
                "pass jitter_ties to break them deterministically"
            )
        offsets = (stream.uniforms(arr.size) - 0.5) * 2e-12
        arr = arr.copy()
        arr[dup_mask] = arr[dup_mask] + offsets[dup_mask]
        arr = np.clip(arr, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        n_jittered += int(np.count_nonzero(dup_mask))
    _, counts = np.unique(arr, return_counts=True)
    if np.any(counts > 1):
        raise TieError("jitter could not separate tied values")
    return arr, n_jittered


def _prepare_unit(raw, config, diagnostics):
    """Transform raw data to the open unit interval, clamped and de-tied."""
    spec = config.transform if config.transform is not None else choose_transform(raw)
    unit = np.atleast_1d(np.asarray(to_unit(spec, raw), dtype=float))
    unit, clamps = _clamp_open(unit)
    unit, jittered = _dedupe_unit(unit, config.master_seed, config.jitter_ties)
    diagnostics["clamp_events"] += clamps
    diagnostics["jittered_values"] += jittered
    return unit, spec


def _bounded_u(u):
    """Pin a uniform into the open interval accepted by the margin quantile."""
    if u < _U_EPS:
        return _U_EPS
    if u > 1.0 - _U_EPS:
        return 1.0 - _U_EPS
    return u


def _stride_checkpoint(m, stride, horizon):
    return stride is not None and (m % stride == 0 or m == horizon)


def _new_diagnostics():
    return {"clamp_events": 0, "jittered_values": 0, "jitter_events": 0, "failed_runs": []}


class _JitterCounter:
    __slots__ = ("jitter_events",)

    def __init__(self):
        self.jitter_events = 0


# ---------------------------------------------------------------------------
# per-run workers (top level so process pools can pickle them)


def _single_hill_iid(config, payload, run_idx):
    unit_data, raw_data, spec = payload
    n, horizon = config.n_observed, config.horizon_n
    stride = config.record_trajectory_every
    stream = RngStream(config.master_seed, run_idx)
    state = hill.hill_init(unit_data, backend=_backend_for(horizon))
    sampled = []
    traj = []
    for m in range(n, horizon):
        x = hill.sample_next(state, stream)
        hill.insert(state, x)
        sampled.append(x)
        if _stride_checkpoint(m + 1, stride, horizon):
            vals = np.concatenate([raw_data, from_unit(spec, np.asarray(sampled))])
            traj.append((run_idx, m + 1, float(compute_statistic(config.statistic, vals)[0])))
    values = np.concatenate([raw_data, from_unit(spec, np.asarray(sampled))])
    return compute_statistic(config.statistic, values), traj, {}


def _single_urn_iid(config, payload, run_idx):
    (raw_data,) = payload
    n, horizon = config.n_observed, config.horizon_n
    stride = config.record_trajectory_every
    stream = RngStream(config.master_seed, run_idx)
    state = hill.urn_init(raw_data)
    traj = []
    for m in range(n, horizon):
        v = hill.urn_sample_next(state, stream)
        hill.urn_insert(state, v)
        if _stride_checkpoint(m + 1, stride, horizon):
            traj.append(
                (run_idx, m + 1, float(compute_statistic(config.statistic, state.values)[0]))
            )
    return compute_statistic(config.statistic, state.values), traj, {}


def _single_normal_analytic(config, payload, run_idx):
    (mean_obs,) = payload
    n, horizon = config.n_observed, config.horizon_n
    stride = config.record_trajectory_every
    stream = RngStream(config.master_seed, run_idx)
    # Running mean evolves as mean_m = mean_{m-1} + z_m / m; the recorded
    # draw is the final forward observation x_N = mean_{N-1} + z_N.
    z = stream.standard_normals(horizon - n)
    denoms = np.arange(n + 1, horizon + 1, dtype=float)
    traj = []
    if stride is not None:
        means = mean_obs + np.cumsum(z / denoms)
        for m in range(n + 1, horizon + 1):
            if _stride_checkpoint(m, stride, horizon):
                traj.append((run_idx, m, float(means[m - n - 1])))
    mean_before_last = mean_obs + float(np.sum(z[:-1] / denoms[:-1]))
    draw = mean_before_last + float(z[-1])
    return np.array([draw]), traj, {}


def _advance_margin(state, score):
    """Push one Gaussian score through a margin: uniformize, invert, insert."""
    u = _bounded_u(normal_cdf(score))
    x = hill.quantile_sample(state, u)
    hill.insert(state, x)
    return x


def _single_bivariate(config, payload, run_idx):
    unit_x, unit_y, raw_x, raw_y, spec_x, spec_y, scores_x, scores_y = payload
    n, horizon = config.n_observed, config.horizon_n
    stride = config.record_trajectory_every
    stream = RngStream(config.master_seed, run_idx)
    backend = _backend_for(horizon)
    hx = hill.hill_init(unit_x, backend=backend)
    hy = hill.hill_init(unit_y, backend=backend)
    cop = copula.bivariate_init(scores_x, scores_y, variant=config.variant)
    sampled_x, sampled_y = [], []
    traj = []
    for m in range(n, horizon):
        xt, yt = copula.sample_pair(cop, stream)
        cop = copula.update_bivariate(cop, xt, yt)
        sampled_x.append(_advance_margin(hx, xt))
        sampled_y.append(_advance_margin(hy, yt))
        if _stride_checkpoint(m + 1, stride, horizon):
            traj.append((run_idx, m + 1, copula.correlation(cop)))
    if config.statistic.kind == "correlation":
        draw = np.array([copula.correlation(cop)])
    else:
        vx = np.concatenate([raw_x, from_unit(spec_x, np.asarray(sampled_x))])
        vy = np.concatenate([raw_y, from_unit(spec_y, np.asarray(sampled_y))])
        draw = np.concatenate(
            [compute_statistic(config.statistic, vx), compute_statistic(config.statistic, vy)]
        )
    return draw, traj, {}


def _single_multivariate(config, payload, run_idx):
    unit_cols, raw_cols, specs, score_matrix = payload
    n, horizon = config.n_observed, config.horizon_n
    d = score_matrix.shape[1]
    stride = config.record_trajectory_every
    stream = RngStream(config.master_seed, run_idx)
    backend = _backend_for(horizon)
    margins = [hill.hill_init(unit_cols[k], backend=backend) for k in range(d)]
    state = copula.multi_init(score_matrix)
    counters = _JitterCounter()
    sampled = [[] for _ in range(d)]
    traj = []
    for m in range(n, horizon):
        vec = copula.sample_vector(state, stream, counters)
        state = copula.multi_update(state, vec)
        for k in range(d):
            sampled[k].append(_advance_margin(margins[k], vec[k]))
        if _stride_checkpoint(m + 1, stride, horizon):
            traj.append((run_idx, m + 1, float(copula.correlation_matrix(state)[0, 1])))
    if config.statistic.kind == "correlation":
        r = copula.correlation_matrix(state)
        draw = np.array([r[k, h] for k in range(d) for h in range(k + 1, d)])
    else:
        parts = []
        for k in range(d):
            vals = np.concatenate([raw_cols[k], from_unit(specs[k], np.asarray(sampled[k]))])
            parts.append(compute_statistic(config.statistic, vals))
        draw = np.concatenate(parts)
    return draw, traj, {"jitter_events": counters.jitter_events}


@dataclass
class RegressionState:
    """Growing least-squares state for one synthetic-response trajectory.

    rows/ys hold the observed data followed by synthesized points (count
    marks the filled prefix); beta and gram_inverse are maintained by
    rank-one updates and cross-checked against the exactly accumulated
    normal equations every _OLS_REFIT_PERIOD steps.
    """

    rows: np.ndarray
    ys: np.ndarray
    count: int
    beta: np.ndarray
    gram_inverse: np.ndarray
    rss: float

    @property
    def sigma2(self):
        return self.rss / (self.count - self.rows.shape[1])

    @property
    def sigma_hat(self):
        return math.sqrt(self.sigma2)


def _residual_quantile(unit_sorted, u):
    """Piecewise-linear inverse CDF over sorted unit residuals (no state)."""
    m = unit_sorted.size
    t = u * (m + 1)
    piece = int(np.ceil(t))
    if piece < 1:
        piece = 1
    elif piece > m + 1:
        piece = m + 1
    lo = 0.0 if piece == 1 else unit_sorted[piece - 2]
    hi = 1.0 if piece == m + 1 else unit_sorted[piece - 1]
    x = lo + (hi - lo) * (t - (piece - 1))
    if x < _U_EPS:
        x = _U_EPS
    elif x > 1.0 - _U_EPS:
        x = 1.0 - _U_EPS
    return x


def _single_regression(config, payload, run_idx):
    design, y_obs, beta0, prec0, rss0 = payload
    n, horizon = config.n_observed, config.horizon_n
    p = design.shape[1]
    stride = config.record_trajectory_every
    stream = RngStream(config.master_seed, run_idx)

    rows = np.empty((horizon, p))
    rows[:n] = design
    ys = np.empty(horizon)
    ys[:n] = y_obs
    state = RegressionState(rows, ys, n, beta0.copy(), prec0.copy(), float(rss0))
    # Exact accumulators drive the periodic direct refit that cross-checks
    # (and then refreshes) the incremental solution.
    gram = design.T @ design
    xty = design.T @ y_obs
    refit_max_delta = 0.0
    traj = []
    for m in range(n, horizon):
        u = next_uniform(stream)
        i = int(u * n)
        if i >= n:
            i = n - 1
        x_row = design[i]

        # Standardized residuals are recomputed under the current fit each
        # step (this is what keeps the scale recursion stable), mapped to
        # the unit interval, and the next error drawn from their
        # interval-uniform predictive.
        sigma = state.sigma_hat
        resid = ys[: state.count] - rows[: state.count] @ state.beta
        unit_sorted = expit(np.sort(resid) / sigma)
        u2 = next_uniform(stream)
        if u2 == 0.0:
            u2 = _U_EPS
        e_new = logit(_residual_quantile(unit_sorted, u2))
        y_new = float(x_row @ state.beta) + sigma * e_new

        px = state.gram_inverse @ x_row
        gain_denom = 1.0 + float(x_row @ px)
        innovation = y_new - float(x_row @ state.beta)
        state.beta = state.beta + (innovation / gain_denom) * px
        state.gram_inverse = state.gram_inverse - np.outer(px, px) / gain_denom
        state.rss += innovation * innovation / gain_denom
        gram += np.outer(x_row, x_row)
        xty += y_new * x_row
        rows[state.count] = x_row
        ys[state.count] = y_new
        state.count += 1

        if (m + 1 - n) % _OLS_REFIT_PERIOD == 0:
            beta_direct = np.linalg.solve(gram, xty)
            delta = float(np.max(np.abs(state.beta - beta_direct)))
            refit_max_delta = max(refit_max_delta, delta)
            if delta > _OLS_REFIT_TOL:
                raise NumericalError(
                    f"incremental OLS drifted {delta:.3e} from the direct refit"
                )
            state.beta = beta_direct
            state.gram_inverse = np.linalg.inv(gram)
            resid = ys[: state.count] - rows[: state.count] @ beta_direct
            state.rss = float(resid @ resid)
        if _stride_checkpoint(m + 1, stride, horizon):
            traj.append((run_idx, m + 1, float(state.beta[0])))
    return state.beta.copy(), traj, {"ols_refit_max_delta": refit_max_delta}


_SINGLES = {
    "hill-iid": _single_hill_iid,
    "urn-iid": _single_urn_iid,
    "normal-analytic": _single_normal_analytic,
    "bivariate": _single_bivariate,
    "multivariate": _single_multivariate,
    "regression": _single_regression,
}


def _run_guarded(args):
    scheme, config, payload, run_idx = args
    try:
        draw, traj, extra = _SINGLES[scheme](config, payload, run_idx)
        return "ok", np.asarray(draw, dtype=float), traj, extra
    except NumericalError as exc:
        return "failed", str(exc), None, None


def _execute(config, payload, columns, diagnostics):
    jobs = [(config.scheme, config, payload, r) for r in range(config.runs)]
    if config.threads > 1 and config.runs > 1:
        chunk = max(1, config.runs // (config.threads * 4))
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(_run_guarded, jobs, chunksize=chunk))
    else:
        results = [_run_guarded(j) for j in jobs]

    draws, traj_rows, failed = [], [], []
    for run_idx, (status, value, traj, extra) in enumerate(results):
        if status == "failed":
            failed.append((run_idx, value))
            continue
        draws.append(value)
        traj_rows.extend(traj)
        for key, v in extra.items():
            if key == "ols_refit_max_delta":
                diagnostics[key] = max(diagnostics.get(key, 0.0), v)
            else:
                diagnostics[key] = diagnostics.get(key, 0) + v
    if failed:
        allowed = int(0.01 * config.runs) if config.skip_failed else 0
        if len(failed) > allowed:
            run_idx, msg = failed[0]
            raise NumericalError(
                f"{len(failed)} of {config.runs} runs failed; first: run {run_idx}: {msg}"
            )
        diagnostics["failed_runs"] = [r for r, _ in failed]

    draws_arr = np.vstack(draws)
    if config.record_trajectory_every is not None:
        trajectories = (
            np.asarray(traj_rows, dtype=float) if traj_rows else np.empty((0, 3))
        )
    else:
        trajectories = None
    return PosteriorDraws(draws_arr, columns, trajectories, diagnostics)


# ---------------------------------------------------------------------------
# public experiment entry points


def _check_n(config, n):
    if n != config.n_observed:
        raise ValueError(f"config says n_observed={config.n_observed} but data has {n}")


def run_iid(config, data):
    """Forward-resample a univariate sample (hill-iid or urn-iid scheme)."""
    if config.scheme not in ("hill-iid", "urn-iid"):
        raise ValueError(f"run_iid cannot execute scheme {config.scheme!r}")
    if config.statistic.kind in ("correlation", "ols-coefficients"):
        raise ValueError(f"{config.statistic.kind} statistic needs a multi-column scheme")
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.size == 0:
        raise ValueError("iid schemes need a nonempty 1-d sample")
    _check_n(config, data.size)
    diagnostics = _new_diagnostics()
    if config.scheme == "hill-iid":
        unit, spec = _prepare_unit(data, config, diagnostics)
        diagnostics["transform"] = spec.kind
        payload = (unit, data, spec)
    else:
        payload = (data,)
    columns = statistic_columns(config.statistic)
    return _execute(config, payload, columns, diagnostics)


def run_normal_analytic(config, data):
    """Forward-simulate the closed-form normal location predictive.

    The draw per run is the final forward observation, whose law given the
    data is normal with mean mean(data) and variance
    :func:`normal_analytic_variance`; both are echoed in the diagnostics
    for comparison.
    """
    if config.scheme != "normal-analytic":
        raise ValueError(f"run_normal_analytic cannot execute scheme {config.scheme!r}")
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.size == 0:
        raise ValueError("normal-analytic needs a nonempty 1-d sample")
    _check_n(config, data.size)
    if config.horizon_n <= config.n_observed:
        raise ValueError("normal-analytic needs at least one forward step")
    diagnostics = _new_diagnostics()
    mean_obs = float(np.mean(data))
    diagnostics["analytic_mean"] = mean_obs
    diagnostics["analytic_variance"] = normal_analytic_variance(
        config.n_observed, config.horizon_n
    )
    return _execute(config, (mean_obs,), ["t_final"], diagnostics)


def run_bivariate(config, x_data, y_data):
    """Forward-resample two coupled margins; draws default to the terminal
    correlation (statistic kind 'correlation'), otherwise the statistic is
    computed per margin with x_/y_ column prefixes."""
    if config.scheme != "bivariate":
        raise ValueError(f"run_bivariate cannot execute scheme {config.scheme!r}")
    if config.statistic.kind == "ols-coefficients":
        raise ValueError("ols-coefficients statistic needs the regression scheme")
    x = np.asarray(x_data, dtype=float)
    y = np.asarray(y_data, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("bivariate needs two equal-length 1-d samples")
    if x.size < 2:
        raise ValueError("bivariate needs at least 2 observations")
    _check_n(config, x.size)
    diagnostics = _new_diagnostics()
    unit_x, spec_x = _prepare_unit(x, config, diagnostics)
    unit_y, spec_y = _prepare_unit(y, config, diagnostics)
    scores_x = gaussian_scores(unit_x)
    scores_y = gaussian_scores(unit_y)
    payload = (unit_x, unit_y, x, y, spec_x, spec_y, scores_x, scores_y)
    if config.statistic.kind == "correlation":
        columns = ["rho"]
    else:
        columns = statistic_columns(config.statistic, margins=["x", "y"])
    return _execute(config, payload, columns, diagnostics)


def run_multivariate(config, data_matrix):
    """Forward-resample d coupled margins with the matrix recursion.

    Only variant A exists in matrix form, so the config must say
    variant='A'. With the correlation statistic the draw is the upper
    triangle of the terminal correlation matrix.
    """
    if config.scheme != "multivariate":
        raise ValueError(f"run_multivariate cannot execute scheme {config.scheme!r}")
    if config.variant != "A":
        raise ValueError("the multivariate recursion is defined for variant 'A' only")
    if config.statistic.kind == "ols-coefficients":
        raise ValueError("ols-coefficients statistic needs the regression scheme")
    data = np.asarray(data_matrix, dtype=float)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValueError("multivariate needs an (n, d) matrix with d >= 2")
    n, d = data.shape
    _check_n(config, n)
    diagnostics = _new_diagnostics()
    unit_cols, raw_cols, specs, score_cols = [], [], [], []
    for k in range(d):
        unit, spec = _prepare_unit(data[:, k], config, diagnostics)
        unit_cols.append(unit)
        raw_cols.append(data[:, k])
        specs.append(spec)
        score_cols.append(gaussian_scores(unit))
    score_matrix = np.column_stack(score_cols)
    copula.multi_init(score_matrix)  # fail fast on a singular start
    payload = (unit_cols, raw_cols, specs, score_matrix)
    if config.statistic.kind == "correlation":
        columns = statistic_columns(config.statistic, dims=d)
    else:
        columns = statistic_columns(
            config.statistic, margins=[f"x{k + 1}" for k in range(d)]
        )
    return _execute(config, payload, columns, diagnostics)


def run_regression(config, y, design):
    """Forward-resample a linear model by synthesizing responses.

    Each step draws a design row uniformly from the n observed rows, draws
    a standardized error from the residual predictive (maintained on the
    unit scale through the logistic map), synthesizes the response with the
    current coefficient/scale estimates, then updates those estimates with
    the new point. The draw per run is the coefficient vector at the
    horizon.
    """
    if config.scheme != "regression":
        raise ValueError(f"run_regression cannot execute scheme {config.scheme!r}")
    if config.statistic.kind != "ols-coefficients":
        raise ValueError("regression draws are coefficient vectors; use ols-coefficients")
    y = np.asarray(y, dtype=float)
    x = np.asarray(design, dtype=float)
    if y.ndim != 1 or x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("regression needs y of length n and an (n, p) design")
    n, p = x.shape
    _check_n(config, n)
    if n <= p:
        raise ValueError(f"need n > p, got n={n}, p={p}")
    if np.linalg.matrix_rank(x) < p:
        raise DegeneracyError("design matrix is rank deficient")
    diagnostics = _new_diagnostics()
    y = y.copy()
    jitter_stream = None
    for _ in range(8):
        gram = x.T @ x
        beta0 = np.linalg.solve(gram, x.T @ y)
        resid = y - x @ beta0
        rss0 = float(resid @ resid)
        if rss0 <= max(1e-300, 1e-24 * float(y @ y)):
            raise DegeneracyError("residuals are (numerically) zero: scale undefined")
        _, inverse, counts = np.unique(resid, return_inverse=True, return_counts=True)
        dup = counts[inverse] > 1
        if not np.any(dup):
            break
        # duplicate residuals (typically duplicated rows) would put atoms in
        # the residual predictive; break them with a response-scale jitter
        if not config.jitter_ties:
            raise TieError(
                f"{int(np.count_nonzero(dup))} tied residuals; "
                "pass jitter_ties to break them deterministically"
            )
        if jitter_stream is None:
            jitter_stream = RngStream(config.master_seed, _JITTER_STREAM_ID)
        scale = max(1.0, float(np.max(np.abs(y))))
        y[dup] = y[dup] + (jitter_stream.uniforms(n)[dup] - 0.5) * 2e-12 * scale
        diagnostics["jittered_values"] += int(np.count_nonzero(dup))
    else:
        raise TieError("jitter could not separate tied residuals")
    prec0 = np.linalg.inv(gram)
    payload = (x, y, beta0, prec0, rss0)
    columns = statistic_columns(config.statistic, n_coef=p)
    return _execute(config, payload, columns, diagnostics)


# ---------------------------------------------------------------------------
# martingale diagnostics


@dataclass
class MartingaleReport:
    """Moment-sequence health check along one predictive trajectory."""

    steps: int
    orders: tuple
    max_band_violation: float
    max_step_bound_violation: float
    first_moment_path: np.ndarray


def martingale_diagnostics(unit_data, horizon, stream, orders=(1, 2, 3, 4)):
    """Walk one trajectory checking the predictive-moment band each step.

    At every state the exact next-draw moment must lie in
    [m/(m+1) * M_r, m/(m+1) * M_r + 1/(m+1)] for each requested order r,
    which also bounds the expected one-step moment increase by 1/(m+1)^2.
    Reported violations are signed (negative = satisfied with margin).
    """
    state = hill.hill_init(unit_data, backend=_backend_for(horizon))
    n = state.m
    if n == 0:
        raise ValueError("martingale diagnostics need a nonempty state")
    if horizon < n:
        raise ValueError("horizon below the observed count")
    max_band = -math.inf
    max_step = -math.inf
    path = np.empty(horizon - n + 1)
    for idx, m in enumerate(range(n, horizon + 1)):
        vals = state.values
        full = np.empty(m + 2)
        full[0] = 0.0
        full[1:-1] = vals
        full[-1] = 1.0
        widths = np.diff(full)
        shrink = m / (m + 1.0)
        slack = 1.0 / (m + 1.0)
        for r in orders:
            moment_r = float(np.sum(vals ** r)) / m
            pmom = float(np.sum(np.diff(full ** (r + 1)) / widths)) / ((r + 1) * (m + 1))
            lower = shrink * moment_r
            band = max(lower - pmom, pmom - (lower + slack))
            max_band = max(max_band, band)
            expected_next = lower + pmom * slack
            max_step = max(max_step, expected_next - (moment_r + slack * slack))
        path[idx] = float(np.sum(vals)) / m
        if m < horizon:
            x = hill.sample_next(state, stream)
            hill.insert(state, x)
    return MartingaleReport(
        steps=horizon - n,
        orders=tuple(orders),
        max_band_violation=max_band,
        max_step_bound_violation=max_step,
        first_moment_path=path,
    )
