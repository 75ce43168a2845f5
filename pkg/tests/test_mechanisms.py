import numpy as np
import pytest

from dpimpute import (
    DegenerateDesignError,
    RandomSource,
    functional_mechanism_ols,
    functional_mechanism_sensitivity,
    laplace_mechanism,
    laplace_sample,
    laplace_samples,
    ols_fit,
)
from dpimpute.mechanisms import _perturbed_quadratic_min


class TestRandomSource:
    def test_same_seed_same_sequence(self):
        a = [RandomSource(42).uniform() for _ in range(3)]
        b = [RandomSource(42).uniform() for _ in range(3)]
        assert a == b

    def test_split_streams_differ(self):
        base = RandomSource(42)
        assert base.split(0).uniform() != base.split(1).uniform()

    def test_split_is_reproducible(self):
        assert RandomSource(7).split(3, 1).uniform() == RandomSource(7, (3, 1)).uniform()


class TestLaplaceSample:
    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            laplace_sample(0.0, RandomSource(0))
        with pytest.raises(ValueError):
            laplace_samples(-1.0, 10, RandomSource(0))

    def test_seeded_determinism(self):
        xs = [laplace_sample(1.0, RandomSource(42)) for _ in range(2)]
        assert xs[0] == xs[1]

    def test_moments(self):
        draws = laplace_samples(1.0, 200_000, RandomSource(5))
        assert abs(draws.mean()) < 0.01
        assert abs(draws.var() - 2.0) < 0.05

    def test_median_uniform_is_zero(self):
        # inverse CDF maps the central uniform draw to exactly 0
        assert -2.0 * np.sign(0.0) * np.log1p(-0.0) == 0.0

    def test_scale_two_doubles_draws(self):
        a = laplace_samples(1.0, 100, RandomSource(9))
        b = laplace_samples(2.0, 100, RandomSource(9))
        np.testing.assert_allclose(b, 2 * a, rtol=1e-15)


class TestLaplaceMechanism:
    def test_rejects_bad_params(self):
        rng = RandomSource(0)
        with pytest.raises(ValueError):
            laplace_mechanism(0.0, 0.0, 1.0, rng)
        with pytest.raises(ValueError):
            laplace_mechanism(0.0, 1.0, 0.0, rng)

    def test_mean_near_value(self):
        rng = RandomSource(3)
        draws = [laplace_mechanism(0.5, 1e-4, 1.0, rng) for _ in range(100_000)]
        assert abs(np.mean(draws) - 0.5) < 5e-5

    def test_scale_depends_only_on_ratio(self):
        a = laplace_mechanism(0.5, 1e-4, 1.0, RandomSource(4))
        b = laplace_mechanism(0.5, 2e-4, 2.0, RandomSource(4))
        assert a == b

    def test_vanishing_noise_limit(self):
        assert abs(laplace_mechanism(0.7, 1.0, 1e12, RandomSource(1)) - 0.7) < 1e-9


class TestOlsFit:
    def test_noiseless_recovery(self):
        rng = RandomSource(10)
        x = rng.uniform(size=(50, 2))
        y = x @ [0.5, 0.5]
        fit = ols_fit(x, y)
        np.testing.assert_allclose(fit.beta, [0.5, 0.5], atol=1e-10)
        assert abs(fit.sigma2_hat) < 1e-12
        assert not fit.private and fit.epsilon_spent == 0.0

    def test_two_point_line(self):
        fit = ols_fit(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(fit.beta, [1.0], atol=1e-14)

    def test_matches_high_precision_oracle(self):
        import mpmath as mp

        rng = RandomSource(77)
        x = rng.uniform(size=(200, 2))
        y = x @ [0.3, 0.6] + rng.normal(0, 0.1, 200)
        fit = ols_fit(x, y)
        mp.mp.dps = 50
        xm = mp.matrix(x.tolist())
        ym = mp.matrix([[v] for v in y])
        beta = mp.lu_solve(xm.T * xm, xm.T * ym)
        oracle = np.array([float(beta[i]) for i in range(2)])
        np.testing.assert_allclose(fit.beta, oracle, atol=1e-8)

    def test_residuals_orthogonal_to_design(self):
        rng = RandomSource(8)
        x = rng.uniform(size=(100, 2))
        y = x @ [0.2, 0.9] + rng.normal(0, 0.2, 100)
        fit = ols_fit(x, y, intercept=True)
        xd = np.column_stack([np.ones(100), x])
        resid = y - xd @ fit.beta
        assert np.abs(xd.T @ resid).max() < 1e-8

    def test_singular_design_rejected(self):
        x = np.ones((10, 2))  # perfectly collinear columns
        with pytest.raises(DegenerateDesignError):
            ols_fit(x, np.ones(10))

    def test_too_few_rows_rejected(self):
        with pytest.raises(DegenerateDesignError):
            ols_fit(np.ones((1, 2)), np.ones(1))


class TestFunctionalMechanism:
    def test_sensitivity_constant(self):
        assert functional_mechanism_sensitivity(2) == 16.0
        assert functional_mechanism_sensitivity(3) == 30.0

    def test_huge_epsilon_recovers_ols_no_intercept(self):
        rng = RandomSource(20)
        x = rng.uniform(size=(500, 2))
        y = np.clip(x @ [0.5, 0.5] + rng.normal(0, 0.1, 500), 0, 1)
        fm = functional_mechanism_ols(x, y, 1e12, rng.split(0))
        ols = ols_fit(x, y)
        np.testing.assert_allclose(fm.beta, ols.beta, atol=1e-6)

    def test_huge_epsilon_recovers_ols_intercept(self):
        rng = RandomSource(21)
        x = rng.uniform(size=(500, 2))
        y = np.clip(x @ [0.5, 0.5] + rng.normal(0, 0.1, 500), 0, 1)
        fm = functional_mechanism_ols(x, y, 1e12, rng.split(0), intercept=True)
        ols = ols_fit(x, y, intercept=True)
        np.testing.assert_allclose(fm.beta, ols.beta, atol=1e-6)

    def test_empty_design_rejected(self):
        with pytest.raises(DegenerateDesignError):
            functional_mechanism_ols(
                np.empty((0, 2)), np.empty(0), 1.0, RandomSource(0)
            )

    def test_rejects_bad_epsilon_and_covariates(self):
        x = np.full((5, 1), 0.5)
        y = np.full(5, 0.5)
        with pytest.raises(ValueError):
            functional_mechanism_ols(x, y, 0.0, RandomSource(0))
        with pytest.raises(ValueError):
            functional_mechanism_ols(x + 2.0, y, 1.0, RandomSource(0))

    def test_deterministic_for_fixed_seed(self):
        rng_data = RandomSource(30)
        x = rng_data.uniform(size=(200, 2))
        y = np.clip(x @ [0.5, 0.5], 0, 1)
        a = functional_mechanism_ols(x, y, 1.0, RandomSource(31))
        b = functional_mechanism_ols(x, y, 1.0, RandomSource(31))
        np.testing.assert_array_equal(a.beta, b.beta)
        assert a.private and a.epsilon_spent == 1.0 and a.sigma2_hat == 0.0

    def test_first_order_optimality(self):
        rng = RandomSource(40)
        x = rng.uniform(size=(500, 2))
        y = x @ [0.5, 0.5]
        gamma, lam1, a = _perturbed_quadratic_min(x, y, 10.0, rng.split(0), 10.0)
        assert np.abs(gamma).max() < 10.0  # coefficient box inactive
        grad = 2.0 * a @ gamma + lam1
        assert np.abs(grad).max() < 1e-8

    def test_mean_beta_near_truth_at_benchmark_scale(self):
        # d=2, n=10,000, beta=(0.5,0.5), sigma2=0.1, eps=0.5: approximate
        # unbiasedness because coefficient noise is O(1) vs Gram entries O(n)
        betas = []
        for s in range(200):
            rng = RandomSource(1000 + s)
            x = rng.uniform(size=(10_000, 2))
            y = np.clip(x @ [0.5, 0.5] + rng.normal(0, np.sqrt(0.1), 10_000), 0, 1)
            betas.append(functional_mechanism_ols(x, y, 0.5, rng.split(0)).beta)
        mean_beta = np.mean(betas, axis=0)
        np.testing.assert_allclose(mean_beta, [0.5, 0.5], atol=0.05)
