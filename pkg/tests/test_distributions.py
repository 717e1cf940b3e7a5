import math

import numpy as np
import pytest
from scipy import stats

from netcontagion.distributions import (
    LossModel,
    NormalLossModel,
    calibrate_alpha,
    make_loss_model,
    regularized_incomplete_beta,
    sample_gamma,
    sample_losses,
    sample_t,
    t_cdf,
    t_quantile,
)


def df2_cdf(x):
    return 0.5 + x / (2 * math.sqrt(x * x + 2))


class TestTCdf:
    @pytest.mark.parametrize("df", [0.5, 1.0, 1.5, 7.0])
    def test_symmetry_point(self, df):
        assert t_cdf(0.0, df) == 0.5

    def test_cauchy(self):
        assert t_cdf(1.0, 1.0) == pytest.approx(0.75, abs=1e-12)
        for x in (-30.0, -2.0, 0.3, 4.0, 1e3):
            assert t_cdf(x, 1.0) == pytest.approx(0.5 + math.atan(x) / math.pi, abs=1e-12)

    def test_two_degrees_of_freedom(self):
        assert t_cdf(1.8856, 2.0) == pytest.approx(0.9, abs=1e-4)
        for x in (-8.0, -0.7, 0.01, 1.8856, 25.0):
            assert t_cdf(x, 2.0) == pytest.approx(df2_cdf(x), abs=1e-12)

    def test_matches_scipy(self):
        for df in (0.7, 1.5, 3.0, 40.0):
            for x in np.linspace(-60, 60, 241):
                assert t_cdf(x, df) == pytest.approx(stats.t.cdf(x, df), abs=1e-12)

    def test_infinite_arguments(self):
        assert t_cdf(math.inf, 1.5) == 1.0
        assert t_cdf(-math.inf, 1.5) == 0.0

    def test_rejects_bad_df(self):
        with pytest.raises(ValueError):
            t_cdf(1.0, 0.0)

    def test_incomplete_beta_closed_form(self):
        # I_x(1, b) = 1 - (1-x)^b
        for x in (0.1, 0.5, 0.93):
            assert regularized_incomplete_beta(1.0, 2.5, x) == pytest.approx(1 - (1 - x) ** 2.5, abs=1e-14)


class TestTQuantile:
    def test_median(self):
        assert t_quantile(0.5, 1.5) == 0.0

    def test_cauchy(self):
        assert t_quantile(0.9, 1.0) == pytest.approx(math.tan(0.4 * math.pi), abs=1e-8)

    def test_two_degrees_of_freedom(self):
        # inverting 1/2 + x/(2 sqrt(x^2+2)) = p gives x = (2p-1) sqrt(2 / (1 - (2p-1)^2))
        a = 2 * 0.9 - 1
        assert t_quantile(0.9, 2.0) == pytest.approx(a * math.sqrt(2 / (1 - a * a)), abs=1e-8)
        assert t_quantile(0.9, 2.0) == pytest.approx(1.8856, abs=1e-4)

    @pytest.mark.parametrize("p", [0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999])
    @pytest.mark.parametrize("df", [1.0, 1.5, 4.0])
    def test_inverts_cdf(self, p, df):
        assert abs(t_cdf(t_quantile(p, df), df) - p) <= 1e-10

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            t_quantile(p, 1.5)


class TestCalibration:
    @pytest.mark.parametrize("q,eta", [(0.05, 0.05), (0.01, 0.1), (0.49, 0.9), (0.001, 0.001)])
    def test_alpha_positive(self, q, eta):
        assert calibrate_alpha(q, eta) > 0

    def test_formula(self):
        assert calibrate_alpha(0.05, 0.05, 1.5) == pytest.approx(stats.t.ppf(0.05, 1.5) / math.log(0.95), rel=1e-10)

    @pytest.mark.parametrize("q", [0.5, 0.6, 0.0])
    def test_rejects_degenerate_q(self, q):
        with pytest.raises(ValueError):
            calibrate_alpha(q, 0.05)

    def test_monte_carlo_failure_probability(self):
        q, eta, n = 0.05, 0.05, 1_000_000
        alpha = calibrate_alpha(q, eta)
        t = stats.t.rvs(1.5, size=n, random_state=np.random.default_rng(7))
        rate = np.mean(1 - np.exp(t / alpha) >= eta)
        assert abs(rate - q) <= 3 * math.sqrt(q * (1 - q) / n)

    def test_median_loss_is_zero(self):
        model = LossModel(q=0.02, eta=0.2)
        x = model.sample(np.random.default_rng(3), 200_001)
        # sample median of a symmetric continuous law; se ~ 1 / (2 f(0) sqrt(n)) in loss units
        assert abs(np.median(x)) < 5 * 1.5 / (2 * 0.35 * model.alpha * math.sqrt(200_001))


class TestSampling:
    def test_gamma_boosting_moments(self):
        rng = np.random.default_rng(11)
        g = sample_gamma(0.75, rng, size=400_000)
        # Gamma(k): mean k, variance k
        assert g.mean() == pytest.approx(0.75, abs=4 * math.sqrt(0.75 / 400_000))
        assert g.var() == pytest.approx(0.75, rel=0.03)
        assert stats.kstest(g, stats.gamma(0.75).cdf).pvalue > 0.01

    def test_t_median(self):
        x = sample_t(1.5, np.random.default_rng(5), size=1_000_000)
        f0 = stats.t.pdf(0, 1.5)
        assert abs(np.median(x)) <= 3 / (2 * f0 * math.sqrt(x.size))

    def test_t_ks_against_t_cdf(self):
        n = 100_000
        x = np.sort(sample_t(1.5, np.random.default_rng(9), size=n))
        cdf = np.array([t_cdf(v, 1.5) for v in x])
        ks = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
        assert ks < 1.628 / math.sqrt(n)

    def test_ratio_sampler_matches_inverse_cdf_sampler(self):
        rng = np.random.default_rng(21)
        fast = sample_t(1.5, rng, size=20_000)
        slow = np.array([t_quantile(u, 1.5) for u in rng.uniform(size=2_000)])
        assert stats.ks_2samp(fast, slow).pvalue > 0.01

    def test_cauchy_ninetieth_percentile(self):
        n = 100_000
        x = sample_t(1.0, np.random.default_rng(13), size=n)
        x90 = math.tan(0.4 * math.pi)
        se = math.sqrt(0.9 * 0.1 / n) / stats.cauchy.pdf(x90)
        assert abs(np.quantile(x, 0.9) - x90) <= 4 * se


class TestLosses:
    def test_support_below_one(self):
        model = LossModel(q=0.05, eta=0.05)
        v = sample_losses(10, model, np.random.default_rng(1), n=100_000)
        assert v.shape == (100_000, 10)
        assert (v < 1).all()

    def test_extreme_draws_stay_below_one(self):
        model = LossModel()
        v = model.losses_from_standard(np.array([-1e9, -np.inf, 1e9, np.inf]))
        assert (v < 1).all() and np.isfinite(v).all()

    @pytest.mark.parametrize("cls", [LossModel, NormalLossModel])
    def test_calibration_property(self, cls):
        q, eta, n = 0.05, 0.05, 1_000_000
        v = cls(q=q, eta=eta).sample(np.random.default_rng(17), n)
        assert abs(np.mean(v >= eta) - q) <= 3 * math.sqrt(q * (1 - q) / n)

    @pytest.mark.parametrize("cls", [LossModel, NormalLossModel])
    def test_median_zero(self, cls):
        v = cls().sample(np.random.default_rng(4), 400_001)
        assert abs(np.median(v)) < 2e-3

    def test_factory(self):
        assert isinstance(make_loss_model("normal", 0.05, 0.05), NormalLossModel)
        assert type(make_loss_model("t", 0.05, 0.05)) is LossModel
        with pytest.raises(ValueError):
            make_loss_model("cauchy", 0.05, 0.05)

    def test_normal_alpha(self):
        m = NormalLossModel(q=0.05, eta=0.05)
        assert m.alpha == pytest.approx(stats.norm.ppf(0.05) / math.log(0.95), rel=1e-12)
