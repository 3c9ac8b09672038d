import math

import numpy as np
import pytest
from scipy import integrate

from cherryyield.errors import DegeneratePredictorError, DomainError, InsufficientDataError
from cherryyield.regression import (
    RegressionFit, fit_ols, p_value_band, p_value_two_sided, predict_with_interval,
    regularized_incomplete_beta, student_t_quantile
)


def ftest(actual: float, expected: float, tolerance: float = 1e-9) -> bool:
    return abs(actual - expected) <= tolerance * max(1.0, abs(expected))


def _t_density(t: float, df: float) -> float:
    log_norm = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(t * t / df))


def _two_sided_tail_by_integration(t: float, df: float) -> float:
    tail, _ = integrate.quad(_t_density, abs(t), math.inf, args=(df,), epsabs=1e-13, epsrel=1e-12)
    return 2.0 * tail


class TestFitOls:

    def test_perfect_line(self):
        fit = fit_ols([(1, 3), (2, 5), (3, 7)])

        assert ftest(fit.slope, 2.0)
        assert ftest(fit.intercept, 1.0)
        assert fit.r_squared == 1.0
        assert fit.p_value is None
        assert fit.residual_se == 0.0

    def test_flat_response(self):
        fit = fit_ols([(1, 4), (2, 4), (3, 4)])

        assert fit.slope == 0.0
        assert ftest(fit.intercept, 4.0)
        assert fit.r_squared is None

    def test_textbook_example(self):
        fit = fit_ols([(1, 1), (2, 3), (3, 2), (4, 5), (5, 4)])

        assert ftest(fit.slope, 0.8)
        assert ftest(fit.intercept, 0.6)
        assert ftest(fit.r_squared, 0.64)
        assert fit.n == 5
        assert fit.df == 3

    def test_matches_numpy_lstsq(self):
        rng = np.random.default_rng(2023)

        for _ in range(100):
            n = int(rng.integers(3, 40))
            x = rng.uniform(0, 300, n)
            y = 0.4 * x + 2 + rng.normal(0, 10, n)
            fit = fit_ols(list(zip(x, y)))

            design = np.column_stack([x, np.ones(n)])
            (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
            r_squared = 1 - np.sum((y - design @ [slope, intercept]) ** 2) / np.sum((y - y.mean()) ** 2)

            assert ftest(fit.slope, slope, 1e-9)
            assert ftest(fit.intercept, intercept, 1e-7)
            assert ftest(fit.r_squared, r_squared, 1e-9)

    def test_matches_least_squares_oracle(self):
        rng = np.random.default_rng(15)

        for _ in range(100):
            n = int(rng.integers(3, 51))
            x = rng.uniform(0, 500, n)
            y = rng.uniform(0, 500, n)
            fit = fit_ols(list(zip(x, y)))

            design = np.column_stack([x, np.ones(n)])
            (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
            r_squared = 1 - np.sum((y - design @ [slope, intercept]) ** 2) / np.sum((y - y.mean()) ** 2)

            assert ftest(fit.slope, slope, 1e-10)
            assert ftest(fit.intercept, intercept, 1e-10)
            assert ftest(fit.r_squared, r_squared, 1e-10)

            t = fit.slope * math.sqrt(fit.sxx) / fit.residual_se
            assert abs(fit.p_value - _two_sided_tail_by_integration(t, n - 2)) < 1e-6

    def test_affine_transform_of_both_variables(self):
        rng = np.random.default_rng(7)

        for _ in range(200):
            x = rng.uniform(0, 100, 12)
            y = 1.3 * x - 4 + rng.normal(0, 5, 12)
            a, c = (rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 10) for _ in range(2))
            b, d = rng.uniform(-50, 50, 2)

            original = fit_ols(list(zip(x, y)))
            transformed = fit_ols(list(zip(a * x + b, c * y + d)))
            intercept = c * original.intercept - c * original.slope * b / a + d

            assert ftest(transformed.slope, original.slope * c / a, 1e-9)
            assert ftest(transformed.intercept, intercept, 1e-7)
            assert ftest(transformed.r_squared, original.r_squared, 1e-9)
            assert ftest(transformed.p_value, original.p_value, 1e-7)

    def test_line_passes_through_centroid(self):
        rng = np.random.default_rng(31)

        for _ in range(100):
            n = int(rng.integers(3, 30))
            x = rng.integers(0, 400, n).astype(float)
            y = rng.integers(0, 80, n).astype(float)

            if np.ptp(x) == 0:
                continue

            fit = fit_ols(list(zip(x, y)))
            assert ftest(fit.slope * x.mean() + fit.intercept, y.mean(), 1e-10)

    def test_r_squared_is_squared_correlation(self):
        rng = np.random.default_rng(43)

        for _ in range(100):
            n = int(rng.integers(3, 30))
            x = rng.uniform(0, 200, n)
            y = 0.8 * x + rng.normal(0, 30, n)

            assert ftest(fit_ols(list(zip(x, y))).r_squared, np.corrcoef(x, y)[0, 1] ** 2, 1e-10)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError, match="insufficient data"):
            fit_ols([(1, 1), (2, 2)])

    def test_constant_predictor(self):
        with pytest.raises(DegeneratePredictorError):
            fit_ols([(5, 1), (5, 2), (5, 3)])

    def test_fit_validates_statistics(self):
        with pytest.raises(DomainError):
            RegressionFit(1.0, 0.0, 1.5, 0.1, 5)

        with pytest.raises(DomainError):
            RegressionFit(1.0, 0.0, 0.5, 0.1, 2)


class TestIncompleteBeta:

    @pytest.mark.parametrize("x, a, b", [(0.0, 2.0, 3.0), (1.0, 2.0, 3.0)])
    def test_bounds(self, x, a, b):
        assert regularized_incomplete_beta(x, a, b) == x

    def test_symmetric_midpoint(self):
        assert ftest(regularized_incomplete_beta(0.5, 3.0, 3.0), 0.5, 1e-12)
        assert ftest(regularized_incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-12)

    @pytest.mark.parametrize("x", [0.05, 0.3, 0.5, 0.77, 0.99])
    def test_closed_forms(self, x):
        assert ftest(regularized_incomplete_beta(x, 1.0, 1.0), x, 1e-12)
        assert ftest(regularized_incomplete_beta(x, 2.0, 1.0), x * x, 1e-12)
        assert ftest(regularized_incomplete_beta(x, 1.0, 3.0), 1 - (1 - x) ** 3, 1e-12)

    @pytest.mark.parametrize("x, a, b", [(0.2, 2.5, 7.0), (0.9, 30.0, 0.5), (0.4, 0.3, 12.0)])
    def test_reflection(self, x, a, b):
        total = regularized_incomplete_beta(x, a, b) + regularized_incomplete_beta(1 - x, b, a)
        assert ftest(total, 1.0, 1e-12)

    def test_uniform_case_on_grid(self):
        for x in np.linspace(0.0, 1.0, 1000):
            assert abs(regularized_incomplete_beta(float(x), 1.0, 1.0) - x) <= 1e-12

    def test_known_value(self):
        assert ftest(regularized_incomplete_beta(0.3, 2.0, 3.0), 0.3483, 1e-12)

    def test_reflection_on_random_arguments(self):
        rng = np.random.default_rng(5)

        for _ in range(2000):
            x = float(rng.uniform(0, 1))
            a, b = (float(value) for value in rng.uniform(0.1, 30, 2))
            total = regularized_incomplete_beta(x, a, b) + regularized_incomplete_beta(1 - x, b, a)

            assert abs(total - 1.0) <= 1e-12

    def test_monotone_in_x(self):
        values = [regularized_incomplete_beta(x, 4.0, 2.5) for x in np.linspace(0, 1, 101)]
        assert all(later >= earlier for earlier, later in zip(values, values[1:]))

    @pytest.mark.parametrize("x, a, b", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2), (math.nan, 1, 1)])
    def test_domain(self, x, a, b):
        with pytest.raises(DomainError, match="domain error"):
            regularized_incomplete_beta(x, a, b)


class TestStudentT:

    def test_known_critical_value(self):
        assert abs(p_value_two_sided(2.1788, 12) - 0.05) < 1e-4

    def test_cauchy_case(self):
        assert ftest(p_value_two_sided(1.0, 1), 0.5, 1e-12)

    def test_zero_statistic(self):
        assert p_value_two_sided(0.0, 5) == 1.0

    def test_huge_statistic_stays_positive(self):
        p = p_value_two_sided(1e9, 3)
        assert 0.0 < p < 1e-20

    @pytest.mark.parametrize("t, df", [(0.3, 1), (1.7, 3), (2.5, 7), (4.0, 13), (-2.2, 30)])
    def test_matches_numerical_integration(self, t, df):
        assert abs(p_value_two_sided(t, df) - _two_sided_tail_by_integration(t, df)) < 1e-6

    def test_symmetric_in_t(self):
        assert p_value_two_sided(-2.0, 9) == p_value_two_sided(2.0, 9)

    @pytest.mark.parametrize("df", [0, 0.5, math.inf])
    def test_invalid_degrees_of_freedom(self, df):
        with pytest.raises(DomainError):
            p_value_two_sided(1.0, df)

    @pytest.mark.parametrize("level, df", [(0.95, 12), (0.9, 3), (0.99, 1), (0.5, 40)])
    def test_quantile_inverts_tail(self, level, df):
        t = student_t_quantile(level, df)
        assert ftest(p_value_two_sided(t, df), 1 - level, 1e-9)

    def test_quantile_known_value(self):
        assert abs(student_t_quantile(0.95, 12) - 2.1788) < 1e-3

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.5])
    def test_quantile_rejects_level(self, level):
        with pytest.raises(DomainError):
            student_t_quantile(level, 5)


class TestPredictWithInterval:

    @pytest.fixture
    def _fit(self):
        return fit_ols([(1, 1), (2, 3), (3, 2), (4, 5), (5, 4)])

    def test_interval_is_centred_on_point(self, _fit):
        interval = predict_with_interval(_fit, 3.0)

        assert ftest(interval.point, 3.0)
        assert ftest(interval.upper - interval.point, interval.point - interval.lower)
        assert interval.annotations == ()

    def test_interval_widens_away_from_mean(self, _fit):
        near = predict_with_interval(_fit, 3.0)
        far = predict_with_interval(_fit, 30.0)

        assert far.upper - far.lower > near.upper - near.lower

    def test_interval_widens_with_level(self, _fit):
        narrow = predict_with_interval(_fit, 3.0, 0.8)
        wide = predict_with_interval(_fit, 3.0, 0.99)

        assert wide.lower < narrow.lower < narrow.upper < wide.upper

    def test_known_half_width(self, _fit):
        interval = predict_with_interval(_fit, 3.0)
        expected = student_t_quantile(0.95, 3) * math.sqrt(1.2) * math.sqrt(1 + 1 / 5)

        assert ftest(interval.upper - interval.point, expected, 1e-9)

    def test_perfect_fit_collapses(self):
        interval = predict_with_interval(fit_ols([(1, 3), (2, 5), (3, 7)]), 10)

        assert interval.is_degenerate
        assert ftest(interval.point, 21.0)
        assert interval.annotations[0].startswith("degenerate")

    def test_summary_fit_collapses(self):
        interval = predict_with_interval(RegressionFit(1.11, -3.75, 0.99, None, 15), 52)

        assert interval.is_degenerate
        assert ftest(interval.point, 53.97)

    def test_rejects_level(self, _fit):
        with pytest.raises(DomainError):
            predict_with_interval(_fit, 3.0, 1.0)


class TestPValueBand:

    @pytest.mark.parametrize("p, band", [
        (0.0004, "P<.001"), (0.001, "P<.01"), (0.009, "P<.01"), (0.049, "P<.05"), (0.05, "n.s."), (1.0, "n.s.")
    ])
    def test_bands(self, p, band):
        assert p_value_band(p) == band

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.1])
    def test_rejects(self, p):
        with pytest.raises(DomainError):
            p_value_band(p)
