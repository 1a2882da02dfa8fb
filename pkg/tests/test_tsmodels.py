import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvedim.errors import (
    ConditioningError,
    DegenerateSeriesError,
    NonstationarityError,
    ValidationError,
)
from curvedim.tsmodels import (
    VarFit,
    aic_select,
    ar1_simulate,
    companion_spectral_radius,
    fit_var_with_aic,
    ljung_box,
    ljung_box_from_autocorrelations,
    multivariate_portmanteau,
    var_fit_yule_walker,
    var_residuals,
    write_var_fit_json,
)


def simulate_var(mats, t_len, rng, burn=500):
    d = mats[0].shape[0]
    x = np.zeros((t_len + burn, d))
    for t in range(len(mats), t_len + burn):
        acc = rng.standard_normal(d)
        for k, a in enumerate(mats, start=1):
            acc += a @ x[t - k]
        x[t] = acc
    return x[burn:]


ZERO_ACF_PATTERN = np.tile([1.0, 0.0, 0.0, -1.0, 0.0, 0.0], 50)  # zero acf at lags 1, 2


class TestAr1Simulate:
    def test_degenerate_coefficient_is_iid(self):
        t_len = 10000
        x = ar1_simulate(0.0, t_len, seed=0)
        assert abs(x.var() - 1.0) <= 3 * np.sqrt(2 / t_len)

    def test_stationary_variance(self):
        x = ar1_simulate(0.5, 100000, seed=1)
        assert abs(x.var() - 4.0 / 3.0) <= 0.05 * 4.0 / 3.0

    def test_lag_one_autocorrelation(self):
        x = ar1_simulate(0.5, 100000, seed=2)
        c = x - x.mean()
        acf1 = (c[:-1] @ c[1:]) / (c @ c)
        assert abs(acf1 - 0.5) <= 0.02

    def test_rejects_nonstationary(self):
        with pytest.raises(NonstationarityError):
            ar1_simulate(1.0, 10)


class TestVarFitYuleWalker:
    def test_white_noise_coefficients_near_zero(self):
        rng = np.random.default_rng(10)
        fit = var_fit_yule_walker(rng.standard_normal((50000, 2)), 1)
        assert np.max(np.abs(fit.coefficient_matrices[0])) <= 0.03

    def test_recovers_known_var1(self):
        a = np.array([[0.5, 0.1], [0.0, 0.3]])
        rng = np.random.default_rng(12345)
        x = simulate_var([a], 100000, rng)
        fit = var_fit_yule_walker(x, 1)
        assert np.max(np.abs(fit.coefficient_matrices[0] - a)) <= 0.02

    def test_order_zero_returns_sample_covariance(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((500, 2))
        fit = var_fit_yule_walker(x, 0)
        assert fit.coefficient_matrices == []
        assert np.allclose(fit.innovation_covariance, x.T @ x / 500)

    def test_singular_system_raises(self):
        rng = np.random.default_rng(12)
        col = rng.standard_normal(400)
        with pytest.raises(ConditioningError):
            var_fit_yule_walker(np.column_stack([col, col]), 1)

    def test_innovation_covariance_psd(self):
        rng = np.random.default_rng(13)
        x = simulate_var([np.array([[0.4, 0.2], [-0.1, 0.3]])], 5000, rng)
        fit = var_fit_yule_walker(x, 2)
        eigs = np.linalg.eigvalsh(fit.innovation_covariance)
        assert eigs.min() >= -1e-10

    def test_fitted_var_stable_on_stationary_data(self):
        a = np.array([[0.5, 0.1], [0.0, 0.3]])
        stable = 0
        runs = 100
        for s in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=77, spawn_key=(s,)))
            x = simulate_var([a], 1000, rng)
            fit = var_fit_yule_walker(x, 1)
            stable += companion_spectral_radius(fit) < 1.0
        assert stable >= 0.99 * runs


class TestAicSelect:
    A1 = np.array([[0.35, -0.15], [0.10, 0.30]])
    A2 = np.array([[0.25, 0.05], [-0.10, 0.20]])
    A3 = np.array([[-0.30, 0.10], [0.05, -0.35]])

    def test_recovers_var3_order(self):
        hits = 0
        runs = 50
        for s in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=42, spawn_key=(8, s)))
            x = simulate_var([self.A1, self.A2, self.A3], 5000, rng)
            best, _ = aic_select(x, 5)
            hits += best == 3
        assert hits >= 0.8 * runs

    def test_white_noise_picks_order_zero(self):
        hits = 0
        runs = 50
        for s in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=42, spawn_key=(7, s)))
            best, _ = aic_select(rng.standard_normal((2000, 2)), 5)
            hits += best == 0
        assert hits >= 0.8 * runs

    def test_centered_table_has_single_zero(self):
        rng = np.random.default_rng(14)
        x = simulate_var([self.A1], 3000, rng)
        best, table = aic_select(x, 4)
        zeros = [tau for tau, v in table.items() if v == 0.0]
        assert zeros == [best]
        assert all(v >= 0.0 for v in table.values())

    def test_invariant_under_component_relabeling(self):
        rng = np.random.default_rng(15)
        x = simulate_var([self.A1, self.A2, self.A3], 4000, rng)
        best_a, _ = aic_select(x, 5)
        best_b, _ = aic_select(x[:, ::-1], 5)
        assert best_a == best_b


class TestLjungBox:
    def test_zero_autocorrelations_give_zero_statistic(self):
        for q in (1, 2):
            res = ljung_box(ZERO_ACF_PATTERN, q)
            assert abs(res.statistic) < 1e-12
            assert res.pvalue == 1.0

    def test_worked_example(self):
        res = ljung_box_from_autocorrelations(np.array([0.2]), 100)
        assert abs(res.statistic - 100 * 102 * 0.04 / 99) < 1e-12
        assert abs(res.statistic - 4.1212) < 1e-3
        assert abs(res.pvalue - 0.0424) < 5e-4

    def test_constant_series_rejected(self):
        with pytest.raises(DegenerateSeriesError):
            ljung_box(np.ones(100), 2)

    @settings(deadline=None, max_examples=30)
    @given(
        scale=st.floats(0.1, 50.0, allow_nan=False),
        shift=st.floats(-10.0, 10.0, allow_nan=False),
        seed=st.integers(0, 1000),
    )
    def test_affine_invariance(self, scale, shift, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(200)
        a = ljung_box(x, 4).statistic
        b = ljung_box(scale * x + shift, 4).statistic
        assert abs(a - b) <= 1e-8 * (1 + abs(a))

    def test_empirical_size(self):
        rej = 0
        runs = 400
        for s in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=81, spawn_key=(s,)))
            if ljung_box(rng.standard_normal(500), 5).pvalue <= 0.05:
                rej += 1
        assert 0.03 <= rej / runs <= 0.07


class TestMultivariatePortmanteau:
    def test_univariate_reduction_matches_ljung_box(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal(300)
        lb = ljung_box(x, 5)
        mv = multivariate_portmanteau(x[:, None], 5)
        assert abs(lb.statistic - mv.statistic) < 1e-10
        assert lb.dof == mv.dof

    def test_zero_covariance_pattern(self):
        # both columns live on even positions, so every lag-1 product
        # pairs an even with an odd (zero) entry
        x = np.tile([1.0, 0.0, -1.0, 0.0, 0.0, 0.0], 80)
        y = np.tile([1.0, 0.0, 1.0, 0.0, -2.0, 0.0], 80)
        res = multivariate_portmanteau(np.column_stack([x, y]), 1)
        assert abs(res.statistic) < 1e-12

    def test_singular_covariance_raises(self):
        rng = np.random.default_rng(17)
        col = rng.standard_normal(300)
        with pytest.raises(ConditioningError):
            multivariate_portmanteau(np.column_stack([col, col]), 2)

    def test_residual_dof_adjustment(self):
        rng = np.random.default_rng(18)
        x = rng.standard_normal((400, 2))
        assert multivariate_portmanteau(x, 5).dof == 20
        assert multivariate_portmanteau(x, 5, fitted_order=2).dof == 12
        assert multivariate_portmanteau(x, 1, fitted_order=3).dof == 1

    def test_empirical_size(self):
        rej = 0
        runs = 400
        for s in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=82, spawn_key=(s,)))
            if multivariate_portmanteau(rng.standard_normal((1000, 2)), 3).pvalue <= 0.05:
                rej += 1
        assert 0.03 <= rej / runs <= 0.08


class TestVarHelpers:
    def test_residuals_of_exact_fit_are_innovations(self):
        a = np.array([[0.5, 0.0], [0.0, 0.3]])
        fit = VarFit(order=1, coefficient_matrices=[a], innovation_covariance=np.eye(2))
        rng = np.random.default_rng(19)
        x = simulate_var([a], 2000, rng)
        resid = var_residuals(x, fit)
        refit = var_fit_yule_walker(resid, 1)
        assert np.max(np.abs(refit.coefficient_matrices[0])) < 0.05

    def test_fit_with_aic_populates_table(self):
        rng = np.random.default_rng(20)
        x = simulate_var([np.array([[0.5, 0.1], [0.0, 0.3]])], 3000, rng)
        fit = fit_var_with_aic(x, 4)
        assert set(fit.aic_table) == {0, 1, 2, 3, 4}
        assert fit.aic_table[fit.order] == 0.0

    def test_var_fit_export(self, tmp_path):
        rng = np.random.default_rng(21)
        x = simulate_var([np.array([[0.4, 0.0], [0.1, 0.2]])], 2000, rng)
        fit = fit_var_with_aic(x, 3)
        path = tmp_path / "fit.json"
        write_var_fit_json(fit, path)
        import json

        payload = json.loads(path.read_text())
        assert payload["order"] == fit.order
        assert set(payload["coefficient_matrices"]) == {
            str(k + 1) for k in range(fit.order)
        }
        assert payload["aic_table"][str(fit.order)] == 0.0

    def test_order_validation(self):
        with pytest.raises(ValidationError):
            var_fit_yule_walker(np.zeros((10, 2)), -1)
        with pytest.raises(ValidationError):
            aic_select(np.zeros((10, 2)), -1)
