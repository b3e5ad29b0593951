"""Tests for parameter types, special functions, moments, MGFs, and sampling."""

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from subgauss import (
    BetaParams,
    DirichletParams,
    GammaParams,
    MomentSequence,
    SeedSpec,
    beta_centered_moments,
    beta_expect,
    beta_log_mgf,
    beta_mean_var,
    beta_mgf,
    beta_raw_moment,
    beta_raw_moments,
    chi_raw_moment,
    dirichlet_log_density,
    log_gamma,
    sample,
    sample_chi,
)
from subgauss.game import project_to_beta

GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0)


class TestParams:
    def test_beta_validation(self):
        for bad in [(0.0, 1.0), (1.0, -2.0), (math.nan, 1.0), (1.0, math.inf)]:
            with pytest.raises(ValueError):
                BetaParams(*bad)

    def test_dirichlet_validation(self):
        with pytest.raises(ValueError):
            DirichletParams((1.0,))
        with pytest.raises(ValueError):
            DirichletParams((1.0, 0.0))

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            GammaParams(1.0, 0.0)

    def test_json_round_trip(self):
        p = BetaParams(1.5, 2.5)
        assert BetaParams.from_json(p.to_json()) == p
        d = DirichletParams((1.0, 2.0, 3.0))
        assert DirichletParams.from_json(d.to_json()) == d
        g = GammaParams(2.0, 5.0)
        assert GammaParams.from_json(g.to_json()) == g

    def test_moment_sequence_requires_unit_head(self):
        with pytest.raises(ValueError):
            MomentSequence((0.5, 0.2))
        seq = MomentSequence((1.0, 0.5, 0.3))
        assert seq.j_max == 2 and seq[1] == 0.5


class TestLogGamma:
    def test_known_values(self):
        assert log_gamma(1.0) == 0.0
        assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-15)
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)

    def test_matches_scipy_on_wide_range(self):
        xs = np.geomspace(1e-3, 1e6, 500)
        ours = np.array([log_gamma(x) for x in xs])
        ref = special.gammaln(xs)
        np.testing.assert_allclose(ours, ref, rtol=1e-13, atol=1e-13)

    def test_domain_errors(self):
        for bad in (0.0, -1.0, math.nan, math.inf):
            with pytest.raises(ValueError):
                log_gamma(bad)


class TestBetaRawMoments:
    def test_first_moment_against_quadrature(self):
        # density of Beta(1,2) is 2(1-x); oracle by direct quadrature
        oracle, _ = integrate.quad(lambda x: x * 2.0 * (1.0 - x), 0.0, 1.0)
        assert beta_raw_moment(BetaParams(1, 2), 1) == pytest.approx(oracle, rel=1e-12)
        assert beta_raw_moment(BetaParams(1, 2), 1) == pytest.approx(1.0 / 3.0)

    def test_fourth_moment_beta_1_2(self):
        oracle, _ = integrate.quad(lambda x: x**4 * 2.0 * (1.0 - x), 0.0, 1.0)
        value = beta_raw_moment(BetaParams(1, 2), 4)
        assert value == pytest.approx(1.0 / 15.0, rel=1e-14)
        assert value == pytest.approx(oracle, rel=1e-10)

    def test_zeroth_moment_is_one(self):
        assert beta_raw_moment(BetaParams(0.3, 7.0), 0) == 1.0

    def test_recurrence_across_grid(self):
        for a in GRID:
            for b in GRID:
                p = BetaParams(a, b)
                m = beta_raw_moments(p, 200)
                j = np.arange(200)
                expected = m[:-1] * (a + j) / (a + b + j)
                np.testing.assert_allclose(m[1:], expected, rtol=1e-15)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            beta_raw_moment(BetaParams(1, 1), -1)


class TestBetaMeanVar:
    def test_uniform(self):
        mean, var = beta_mean_var(BetaParams(1, 1))
        assert mean == pytest.approx(0.5)
        assert var == pytest.approx(1.0 / 12.0)

    def test_beta_1_2_against_quadrature(self):
        mean, var = beta_mean_var(BetaParams(1, 2))
        q_mean = beta_expect(lambda x: x, BetaParams(1, 2))
        q_var = beta_expect(lambda x: (x - q_mean) ** 2, BetaParams(1, 2))
        assert mean == pytest.approx(q_mean, rel=1e-10)
        assert var == pytest.approx(q_var, rel=1e-9)
        assert var == pytest.approx(1.0 / 18.0)

    def test_symmetric_mean_is_half(self):
        for a in (0.17, 1.0, 42.0):
            mean, _ = beta_mean_var(BetaParams(a, a))
            assert mean == 0.5


class TestBetaMgf:
    def test_at_zero(self):
        assert beta_mgf(BetaParams(3.2, 0.4), 0.0) == 1.0

    def test_uniform_at_one(self):
        assert beta_mgf(BetaParams(1, 1), 1.0) == pytest.approx(math.e - 1.0, rel=1e-13)

    def test_monte_carlo_oracle(self):
        p = BetaParams(2, 3)
        draws = sample(p, SeedSpec(20240311), 10**7)
        values = np.exp(2.0 * draws)
        mc, se = values.mean(), values.std(ddof=1) / math.sqrt(values.size)
        assert abs(beta_mgf(p, 2.0) - mc) <= 3.0 * se

    @pytest.mark.parametrize("a,b", [(0.1, 0.1), (0.1, 50.0), (1.0, 2.0), (50.0, 50.0), (2.5, 0.3)])
    @pytest.mark.parametrize("lam", [-100.0, -7.0, 0.5, 100.0])
    def test_series_matches_quadrature(self, a, b, lam):
        p = BetaParams(a, b)
        oracle = beta_expect(lambda x: math.exp(lam * x), p)
        assert beta_mgf(p, lam) == pytest.approx(oracle, rel=1e-9)

    def test_jensen_lower_bound(self):
        for a in GRID:
            for b in GRID:
                p = BetaParams(a, b)
                mean, _ = beta_mean_var(p)
                for lam in (-50.0, -1.0, 0.05, 3.0, 80.0):
                    assert beta_log_mgf(p, lam) - lam * mean >= -1e-12

    def test_log_mgf_finite_far_beyond_float_overflow(self):
        value = beta_log_mgf(BetaParams(2, 3), 5000.0)
        assert math.isfinite(value) and 0 < value < 5000.0

    def test_lambda_cap(self):
        with pytest.raises(OverflowError):
            beta_mgf(BetaParams(1, 1), 2e5)
        with pytest.raises(OverflowError):
            beta_log_mgf(BetaParams(1, 1), 50.0, lambda_cap=10.0)

    def test_non_finite_lambda_rejected(self):
        with pytest.raises(ValueError):
            beta_log_mgf(BetaParams(1, 1), math.nan)


class TestDirichletDensity:
    def test_uniform_simplex_density(self):
        d = DirichletParams((1.0, 1.0, 1.0))
        for x in [(0.2, 0.3, 0.5), (1 / 3, 1 / 3, 1 / 3)]:
            assert dirichlet_log_density(d, x) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_two_category_matches_beta_density(self):
        # Dir(2,1) on (x, 1-x) is the Beta(2,1) density 2x
        d = DirichletParams((2.0, 1.0))
        assert dirichlet_log_density(d, (0.5, 0.5)) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_permutation_invariance(self):
        d = DirichletParams((1.7, 1.7, 1.7))
        x = (0.1, 0.3, 0.6)
        base = dirichlet_log_density(d, x)
        for perm in [(0.3, 0.1, 0.6), (0.6, 0.3, 0.1)]:
            assert dirichlet_log_density(d, perm) == pytest.approx(base, rel=1e-14)

    def test_boundary_divergence(self):
        assert dirichlet_log_density(DirichletParams((0.5, 2.0)), (0.0, 1.0)) == math.inf
        assert dirichlet_log_density(DirichletParams((3.0, 2.0)), (0.0, 1.0)) == -math.inf

    def test_invalid_points(self):
        d = DirichletParams((1.0, 1.0))
        with pytest.raises(ValueError):
            dirichlet_log_density(d, (0.6, 0.6))
        with pytest.raises(ValueError):
            dirichlet_log_density(d, (1.2, -0.2))
        with pytest.raises(ValueError):
            dirichlet_log_density(d, (0.5, 0.25, 0.25))


class TestSampling:
    def test_determinism(self):
        spec = SeedSpec(42, 3)
        a = sample(BetaParams(2, 5), spec, 1000)
        b = sample(BetaParams(2, 5), spec, 1000)
        assert np.array_equal(a, b)
        c = sample(BetaParams(2, 5), SeedSpec(42, 4), 1000)
        assert not np.array_equal(a, c)

    def test_uniform_mean(self):
        draws = sample(BetaParams(1, 1), SeedSpec(1), 10**6)
        se = 1.0 / math.sqrt(12.0 * 10**6)
        assert abs(draws.mean() - 0.5) <= 4.0 * se

    def test_dirichlet_coordinate_means(self):
        d = DirichletParams((1.0, 1.0, 1.0))
        draws = sample(d, SeedSpec(2), 10**6)
        np.testing.assert_allclose(draws.sum(axis=1), 1.0, atol=1e-12)
        var = (1 / 3) * (2 / 3) / 4.0  # Dirichlet marginal variance
        se = math.sqrt(var / 10**6)
        assert np.abs(draws.mean(axis=0) - 1.0 / 3.0).max() <= 4.0 * se

    def test_gamma_mean(self):
        g = GammaParams(2.0, 5.0)
        draws = sample(g, SeedSpec(3), 10**6)
        se = math.sqrt(2.0 / 25.0 / 10**6)
        assert abs(draws.mean() - 0.4) <= 4.0 * se

    def test_categorical_counts(self):
        probs = (0.2, 0.3, 0.5)
        draws = sample(probs, SeedSpec(4), 10**5)
        freqs = np.bincount(draws, minlength=3) / 10**5
        for f, p in zip(freqs, probs):
            assert abs(f - p) <= 4.0 * math.sqrt(p * (1 - p) / 10**5)

    def test_projection_matches_beta_distribution(self):
        # sum of Dirichlet coordinates over a subset follows the projected Beta
        rng = np.random.default_rng(99)
        critical = float(special.kolmogi(1e-3)) / math.sqrt(10**5)
        for trial in range(3):
            k = int(rng.integers(3, 7))
            alphas = tuple(np.round(rng.uniform(0.3, 5.0, size=k), 2))
            subset = tuple(range(1 + trial % (k - 1)))
            d = DirichletParams(alphas)
            projected = project_to_beta(d, subset)
            draws = sample(d, SeedSpec(50, trial), 10**5)[:, list(subset)].sum(axis=1)
            ks = stats.kstest(draws, stats.beta(projected.alpha, projected.beta).cdf)
            assert ks.statistic < critical

    def test_count_validation(self):
        with pytest.raises(ValueError):
            sample(BetaParams(1, 1), SeedSpec(0), -1)


class TestChiMoments:
    def test_second_moment_is_dimension(self):
        assert chi_raw_moment(3, 2) == pytest.approx(3.0, rel=1e-14)

    def test_zeroth(self):
        for k in (1, 7, 20):
            assert chi_raw_moment(k, 0) == 1.0

    def test_mean_of_absolute_normal(self):
        exact = chi_raw_moment(1, 1)
        assert exact == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-14)
        draws = np.abs(SeedSpec(11).generator().standard_normal(10**6))
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(exact - draws.mean()) <= 4.0 * se

    def test_recurrence(self):
        for k in range(1, 21):
            for j in range(0, 101, 7):
                lhs = chi_raw_moment(k, j + 2)
                rhs = (k + j) * chi_raw_moment(k, j)
                assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_sampler_matches_mean(self):
        draws = sample_chi(4, SeedSpec(12), 2 * 10**5)
        exact = chi_raw_moment(4, 1)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - exact) <= 4.0 * se


class TestQuadratureOracle:
    def test_handles_integrable_singularities(self):
        # both shapes below 1: density blows up at both endpoints
        p = BetaParams(0.3, 0.6)
        assert beta_expect(lambda x: 1.0, p) == pytest.approx(1.0, rel=1e-10)
        mean, _ = beta_mean_var(p)
        assert beta_expect(lambda x: x, p) == pytest.approx(mean, rel=1e-10)

    def test_centered_moments_match_formula(self):
        p = BetaParams(3.0, 3.0)
        _, var = beta_mean_var(p)
        moments = beta_centered_moments(p, 2)
        assert moments[0] == pytest.approx(var, rel=1e-9)
        # E[(X-1/2)^4] for Beta(3,3): direct quadrature with the known density
        norm = math.gamma(6) / math.gamma(3) ** 2
        oracle, _ = integrate.quad(
            lambda x: (x - 0.5) ** 4 * norm * (x * (1 - x)) ** 2, 0, 1
        )
        assert moments[1] == pytest.approx(oracle, rel=1e-9)


class TestSeedSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            SeedSpec(-1)
        with pytest.raises(ValueError):
            SeedSpec(2**64)

    def test_substreams_differ(self):
        spec = SeedSpec(7)
        a = spec.generator(0).random(10)
        b = spec.generator(1).random(10)
        assert not np.array_equal(a, b)

    def test_derived(self):
        assert SeedSpec(7, 1).derived(3) == SeedSpec(7, 4)
