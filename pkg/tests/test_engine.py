import math

import numpy as np
import pytest

from predres import engine
from predres.engine import (
    PosteriorDraws,
    RunConfig,
    StatisticSpec,
    beta_from_moments,
    compute_statistic,
    martingale_diagnostics,
    normal_analytic_variance,
    parse_statistic,
    run_bivariate,
    run_iid,
    run_multivariate,
    run_normal_analytic,
    run_regression,
    statistic_columns,
    summarize,
)
from predres.errors import DegeneracyError, InversionError, NumericalError, TieError
from predres.rng import RngStream


def _config(**kw):
    base = dict(
        n_observed=20, horizon_n=200, runs=10, master_seed=1, scheme="hill-iid"
    )
    base.update(kw)
    return RunConfig(**base)


def _ks_two_sample(a, b):
    a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


class TestStatistics:
    def test_constant_values(self):
        vals = np.full(50, 3.75)  # dyadic, so the float mean is exact
        assert compute_statistic(StatisticSpec("mean"), vals)[0] == 3.75
        assert compute_statistic(StatisticSpec("variance"), vals)[0] == 0.0
        vals = np.full(50, 3.7)
        assert compute_statistic(StatisticSpec("mean"), vals)[0] == pytest.approx(3.7, rel=1e-15)
        assert compute_statistic(StatisticSpec("variance"), vals)[0] == pytest.approx(0.0, abs=1e-28)

    def test_median_of_three(self):
        assert compute_statistic(StatisticSpec("quantile", 0.5), [1.0, 2.0, 3.0])[0] == 2.0

    def test_beta_inversion_recovers_shapes(self):
        a, b = beta_from_moments(2.0 / 7.0, 10.0 / 392.0)
        assert abs(a - 2.0) < 1e-10
        assert abs(b - 5.0) < 1e-10

    def test_beta_inversion_rejects_flat(self):
        with pytest.raises(InversionError):
            beta_from_moments(0.5, 0.3)  # sigma2 >= theta*(1-theta)

    def test_correlation_statistic(self, rng_np):
        x = rng_np.normal(size=400)
        y = 0.8 * x + 0.6 * rng_np.normal(size=400)
        r = compute_statistic(StatisticSpec("correlation"), np.column_stack([x, y]))[0]
        assert abs(r - np.corrcoef(x, y)[0, 1]) < 1e-12

    def test_ols_statistic(self, rng_np):
        x = np.column_stack([np.ones(60), rng_np.normal(size=60)])
        y = x @ np.array([1.5, -0.7]) + 0.1 * rng_np.normal(size=60)
        beta = compute_statistic(
            StatisticSpec("ols-coefficients"), np.column_stack([y, x])
        )
        np.testing.assert_allclose(beta, np.linalg.lstsq(x, y, rcond=None)[0], atol=1e-12)

    def test_parse_statistic(self):
        assert parse_statistic("quantile:0.5") == StatisticSpec("quantile", 0.5)
        assert parse_statistic("mean") == StatisticSpec("mean")
        with pytest.raises(ValueError):
            parse_statistic("quantile:2.0")
        with pytest.raises(ValueError):
            parse_statistic("mode")

    def test_columns(self):
        assert statistic_columns(StatisticSpec("beta-moments")) == ["theta", "sigma2", "a", "b"]
        assert statistic_columns(StatisticSpec("correlation"), dims=3) == [
            "rho_12", "rho_13", "rho_23",
        ]
        assert statistic_columns(StatisticSpec("ols-coefficients"), n_coef=2) == [
            "beta_1", "beta_2",
        ]
        assert statistic_columns(StatisticSpec("mean"), margins=["x", "y"]) == [
            "x_mean", "y_mean",
        ]


class TestSummarize:
    def _draws(self, arr, cols):
        return PosteriorDraws(np.asarray(arr, dtype=float), cols, None, {})

    def test_single_draw_safe(self):
        s = summarize(self._draws([[2.0]], ["mean"]))
        assert s["per_column"][0]["sd"] == 0.0
        assert not s["mc_se_reliable"]

    def test_symmetric_two_draws(self):
        s = summarize(self._draws([[-1.0], [1.0]], ["mean"]))
        col = s["per_column"][0]
        assert col["mean"] == 0.0
        assert col["sd"] == pytest.approx(math.sqrt(2.0))

    def test_quantile_monotonicity(self, rng_np):
        s = summarize(self._draws(rng_np.normal(size=(200, 1)), ["mean"]))
        qs = [s["per_column"][0]["quantiles"][k] for k in ["0.025", "0.25", "0.5", "0.75", "0.975"]]
        assert all(a <= b for a, b in zip(qs, qs[1:]))


class TestRunConfig:
    def test_rejects_horizon_below_n(self):
        with pytest.raises(ValueError):
            _config(horizon_n=10)

    def test_allows_zero_forward_steps(self):
        assert _config(horizon_n=20).horizon_n == 20

    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError):
            _config(scheme="mcmc")


class TestRunIid:
    def test_zero_forward_steps_returns_sample_mean_exactly(self, rng_np):
        data = rng_np.uniform(0.1, 0.9, size=20)
        cfg = _config(horizon_n=20, runs=5)
        draws = run_iid(cfg, data)
        np.testing.assert_array_equal(draws.draws, np.full((5, 1), np.mean(data)))

    def test_determinism(self, rng_np):
        data = rng_np.uniform(0.1, 0.9, size=20)
        cfg = _config(runs=6, master_seed=99)
        a = run_iid(cfg, data)
        b = run_iid(cfg, data)
        np.testing.assert_array_equal(a.draws, b.draws)

    def test_threads_do_not_change_results(self, rng_np):
        data = rng_np.uniform(0.1, 0.9, size=15)
        cfg1 = _config(n_observed=15, horizon_n=120, runs=8, master_seed=4)
        cfg2 = _config(n_observed=15, horizon_n=120, runs=8, master_seed=4, threads=2)
        np.testing.assert_array_equal(run_iid(cfg1, data).draws, run_iid(cfg2, data).draws)

    def test_auto_transform_logit_for_real_line(self, rng_np):
        data = rng_np.normal(size=20)
        draws = run_iid(_config(runs=3), data)
        assert draws.diagnostics["transform"] == "logit"

    def test_auto_transform_identity_inside_unit(self, rng_np):
        data = rng_np.uniform(0.05, 0.95, size=20)
        draws = run_iid(_config(runs=3), data)
        assert draws.diagnostics["transform"] == "identity"

    def test_ties_raise_without_jitter(self):
        data = np.array([0.2, 0.4, 0.4, 0.8] + list(np.linspace(0.5, 0.7, 16)))
        with pytest.raises(TieError):
            run_iid(_config(runs=2), data)

    def test_ties_jittered_when_enabled(self):
        data = np.array([0.2, 0.4, 0.4, 0.8] + list(np.linspace(0.5, 0.7, 16)))
        draws = run_iid(_config(runs=2, jitter_ties=True), data)
        assert draws.diagnostics["jittered_values"] >= 2
        assert np.isfinite(draws.draws).all()

    def test_urn_support_stays_observed(self, rng_np):
        data = rng_np.normal(size=20)
        cfg = _config(scheme="urn-iid", runs=4, horizon_n=120, statistic=StatisticSpec("quantile", 0.5))
        draws = run_iid(cfg, data)
        assert np.isfinite(draws.draws).all()
        # replay one run at the hill level: every forward value is observed
        from predres.hill import urn_init, urn_insert, urn_sample_next
        observed = set(data.tolist())
        state = urn_init(data)
        stream = RngStream(cfg.master_seed, 0)
        for _ in range(cfg.horizon_n - cfg.n_observed):
            v = urn_sample_next(state, stream)
            assert v in observed
            urn_insert(state, v)

    def test_trajectory_checkpoints(self, rng_np):
        data = rng_np.uniform(0.1, 0.9, size=20)
        cfg = _config(runs=2, horizon_n=100, record_trajectory_every=25)
        draws = run_iid(cfg, data)
        steps = sorted(set(int(s) for s in draws.trajectories[:, 1]))
        assert steps == [25, 50, 75, 100]

    def test_wrong_n_rejected(self, rng_np):
        with pytest.raises(ValueError):
            run_iid(_config(n_observed=21), rng_np.uniform(0.1, 0.9, size=20))


class TestNormalAnalytic:
    def test_single_step_variance_is_one(self):
        assert normal_analytic_variance(50, 51) == 1.0

    def test_partial_sum_value(self):
        v = normal_analytic_variance(50, 1000)
        direct = 1.0 + sum(1.0 / i ** 2 for i in range(51, 1000))
        assert v == pytest.approx(direct, rel=1e-15)
        assert 1.0 + 1.0 / 50 - 1.0 / 999 >= v - 1.0 >= 0.0  # bracketed by integral bounds
        assert abs(v - 1.0190) < 2e-4

    def test_simulation_matches_closed_form(self, rng_np):
        data = rng_np.normal(size=50)
        cfg = _config(
            n_observed=50, horizon_n=400, runs=600, master_seed=7, scheme="normal-analytic"
        )
        draws = run_normal_analytic(cfg, data)
        target_var = draws.diagnostics["analytic_variance"]
        got_var = float(np.var(draws.draws[:, 0], ddof=1))
        assert abs(got_var - target_var) / target_var < 0.2
        mean_err = abs(float(np.mean(draws.draws[:, 0])) - draws.diagnostics["analytic_mean"])
        assert mean_err < 3.0 * math.sqrt(target_var / 600)

    def test_requires_forward_step(self, rng_np):
        with pytest.raises(ValueError):
            run_normal_analytic(
                _config(n_observed=20, horizon_n=20, scheme="normal-analytic"),
                rng_np.normal(size=20),
            )


class TestBivariate:
    def test_perfect_correlation_sticks(self, rng_np):
        x = rng_np.normal(size=20)
        cfg = _config(
            scheme="bivariate", horizon_n=120, runs=4, statistic=StatisticSpec("correlation")
        )
        draws = run_bivariate(cfg, x, x.copy())
        np.testing.assert_array_equal(draws.draws, np.ones((4, 1)))

    def test_margin_matches_univariate_hill(self, rng_np):
        # x-margin forward samples follow the univariate scheme in law:
        # compare mean draws via a two-sample KS at desk scale
        x = rng_np.normal(size=30)
        y = rng_np.normal(size=30)
        runs = 200
        cfg_b = _config(
            n_observed=30, horizon_n=300, runs=runs, master_seed=11,
            scheme="bivariate", statistic=StatisticSpec("mean"),
        )
        biv = run_bivariate(cfg_b, x, y)
        x_means = biv.draws[:, biv.columns.index("x_mean")]
        cfg_u = _config(
            n_observed=30, horizon_n=300, runs=runs, master_seed=12, scheme="hill-iid"
        )
        uni = run_iid(cfg_u, x).draws[:, 0]
        assert _ks_two_sample(x_means, uni) < 0.15

    def test_correlation_draws_bounded(self, rng_np):
        x = rng_np.normal(size=25)
        y = 0.5 * x + rng_np.normal(size=25)
        cfg = _config(
            n_observed=25, horizon_n=150, runs=20, scheme="bivariate",
            statistic=StatisticSpec("correlation"),
        )
        draws = run_bivariate(cfg, x, y)
        assert np.all(np.abs(draws.draws) <= 1.0)

    def test_rejects_unequal_lengths(self, rng_np):
        cfg = _config(scheme="bivariate")
        with pytest.raises(ValueError):
            run_bivariate(cfg, rng_np.normal(size=20), rng_np.normal(size=19))


class TestMultivariate:
    def test_d2_reproduces_bivariate_model_a(self, rng_np):
        x = rng_np.normal(size=22)
        y = 0.4 * x + rng_np.normal(size=22)
        kw = dict(n_observed=22, horizon_n=150, runs=6, master_seed=17)
        biv = run_bivariate(
            _config(scheme="bivariate", variant="A", statistic=StatisticSpec("correlation"), **kw),
            x, y,
        )
        multi = run_multivariate(
            _config(scheme="multivariate", variant="A", statistic=StatisticSpec("correlation"), **kw),
            np.column_stack([x, y]),
        )
        np.testing.assert_array_equal(biv.draws[:, 0], multi.draws[:, 0])

    def test_block_independent_pairs_centered_at_zero(self, rng_np):
        a = rng_np.normal(size=(40, 2))
        b = rng_np.normal(size=(40, 2))
        data = np.column_stack([a[:, 0], 0.9 * a[:, 0] + 0.45 * a[:, 1], b[:, 0]])
        cfg = _config(
            n_observed=40, horizon_n=200, runs=40, scheme="multivariate", variant="A",
            statistic=StatisticSpec("correlation"),
        )
        draws = run_multivariate(cfg, data)
        cols = draws.columns
        cross = draws.draws[:, [cols.index("rho_13"), cols.index("rho_23")]]
        assert abs(float(np.mean(cross))) < 0.15
        within = draws.draws[:, cols.index("rho_12")]
        assert float(np.mean(within)) > 0.5

    def test_variant_b_rejected(self, rng_np):
        cfg = _config(scheme="multivariate", variant="B")
        with pytest.raises(ValueError):
            run_multivariate(cfg, rng_np.normal(size=(20, 2)))

    def test_singular_start_rejected(self, rng_np):
        x = rng_np.normal(size=20)
        cfg = _config(scheme="multivariate", variant="A")
        with pytest.raises(DegeneracyError):
            run_multivariate(cfg, np.column_stack([x, x]))


class TestRegression:
    def _dataset(self, rng, n=40):
        design = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = design @ np.array([2.0, 0.0]) + rng.normal(size=n)
        return y, design

    def test_zero_forward_steps_returns_ols(self, rng_np):
        y, x = self._dataset(rng_np)
        cfg = _config(
            n_observed=40, horizon_n=40, runs=3, scheme="regression",
            statistic=StatisticSpec("ols-coefficients"),
        )
        draws = run_regression(cfg, y, x)
        ols = np.linalg.lstsq(x, y, rcond=None)[0]
        np.testing.assert_allclose(draws.draws, np.tile(ols, (3, 1)), atol=1e-9)
        assert np.all(draws.draws == draws.draws[0])

    def test_exact_linear_data_degenerate(self):
        x = np.column_stack([np.ones(30), np.arange(30.0)])
        y = x @ np.array([1.0, 2.0])
        cfg = _config(
            n_observed=30, horizon_n=60, runs=2, scheme="regression",
            statistic=StatisticSpec("ols-coefficients"),
        )
        with pytest.raises(DegeneracyError):
            run_regression(cfg, y, x)

    def test_rank_deficient_design(self, rng_np):
        z = rng_np.normal(size=30)
        x = np.column_stack([z, 2.0 * z])
        y = z + rng_np.normal(size=30)
        cfg = _config(
            n_observed=30, horizon_n=60, runs=2, scheme="regression",
            statistic=StatisticSpec("ols-coefficients"),
        )
        with pytest.raises(DegeneracyError):
            run_regression(cfg, y, x)

    def test_incremental_matches_direct_refit(self, rng_np):
        y, x = self._dataset(rng_np)
        cfg = _config(
            n_observed=40, horizon_n=1240, runs=2, scheme="regression",
            statistic=StatisticSpec("ols-coefficients"), master_seed=3,
        )
        draws = run_regression(cfg, y, x)
        assert draws.diagnostics["ols_refit_max_delta"] <= 1e-8
        assert np.isfinite(draws.draws).all()

    def test_posterior_centers_near_ols(self, rng_np):
        y, x = self._dataset(rng_np, n=50)
        cfg = _config(
            n_observed=50, horizon_n=600, runs=60, scheme="regression",
            statistic=StatisticSpec("ols-coefficients"), master_seed=5,
        )
        draws = run_regression(cfg, y, x)
        ols = np.linalg.lstsq(x, y, rcond=None)[0]
        np.testing.assert_allclose(np.mean(draws.draws, axis=0), ols, atol=0.3)


class TestFailurePolicy:
    def test_failed_run_aborts_by_default(self, rng_np, monkeypatch):
        data = rng_np.uniform(0.1, 0.9, size=20)
        original = engine._SINGLES["hill-iid"]

        def flaky(config, payload, run_idx):
            if run_idx == 0:
                raise NumericalError("synthetic failure")
            return original(config, payload, run_idx)

        monkeypatch.setitem(engine._SINGLES, "hill-iid", flaky)
        with pytest.raises(NumericalError):
            run_iid(_config(runs=150), data)

    def test_skip_failed_tolerates_one_percent(self, rng_np, monkeypatch):
        data = rng_np.uniform(0.1, 0.9, size=20)
        original = engine._SINGLES["hill-iid"]

        def flaky(config, payload, run_idx):
            if run_idx == 0:
                raise NumericalError("synthetic failure")
            return original(config, payload, run_idx)

        monkeypatch.setitem(engine._SINGLES, "hill-iid", flaky)
        draws = run_iid(_config(runs=150, skip_failed=True, horizon_n=60), data)
        assert draws.draws.shape[0] == 149
        assert draws.diagnostics["failed_runs"] == [0]

    def test_skip_failed_still_raises_beyond_tolerance(self, rng_np, monkeypatch):
        data = rng_np.uniform(0.1, 0.9, size=20)
        original = engine._SINGLES["hill-iid"]

        def flaky(config, payload, run_idx):
            if run_idx < 3:
                raise NumericalError("synthetic failure")
            return original(config, payload, run_idx)

        monkeypatch.setitem(engine._SINGLES, "hill-iid", flaky)
        with pytest.raises(NumericalError):
            run_iid(_config(runs=150, skip_failed=True, horizon_n=60), data)


class TestMartingaleDiagnostics:
    def test_band_holds_along_trajectory(self):
        unit = np.sort(RngStream(2, 50).uniforms(20))
        report = martingale_diagnostics(unit, 400, RngStream(2, 0))
        assert report.max_band_violation <= 1e-12
        assert report.max_step_bound_violation <= 1e-12
        assert report.steps == 380
        assert report.first_moment_path.size == 381

    def test_near_constant_data_keeps_moments_flat(self):
        from predres.engine import _dedupe_unit
        unit, _ = _dedupe_unit(np.full(50, 0.5), 9, True)
        report = martingale_diagnostics(unit, 250, RngStream(9, 0))
        assert np.max(np.abs(report.first_moment_path - 0.5)) < 0.05

    def test_moment_path_converges(self):
        unit = np.sort(RngStream(6, 50).uniforms(30))
        report = martingale_diagnostics(unit, 2000, RngStream(6, 0))
        path = report.first_moment_path
        assert abs(path[-1] - path[path.size // 2]) < 0.05
