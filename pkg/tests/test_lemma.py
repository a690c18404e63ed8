import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from darts_plus.errors import DatasetError, QuadratureError, RootFindingError
from darts_plus.lemma import (
    E,
    LemmaConfig,
    LemmaModel,
    LemmaParams,
    alpha0_gradient_at_fixed_point,
    fixed_point_diagnostics,
    fixed_point_eta,
    fixed_point_lambda,
    g_function,
    gaussian_expectation,
    gen_mixture,
    grad_alpha0_closed_form,
    grad_train_closed_form,
    hermite_rule,
    lemma_datasets,
    lemma_gradients,
    lemma_loss,
    legendre_rule,
    monte_carlo_alpha0_gradient,
    normalized_mu,
    normalized_sigma,
    sigma0_of_r,
    sigma0_sensitivity,
    train_lemma_bilevel,
)
from darts_plus.tensor import finite_diff_check

R_GRID = [0.5, 1.0, 2.0, 4.0, 8.0]


def generic_model():
    w_r = np.array([0.5, 0.9])
    return LemmaModel(alpha0=0.3, W=np.array([[0.9, 0.2], [-0.1, 0.7]]), w_r=w_r, r=float(np.linalg.norm(w_r)))


def normalized_fixed_point(r, alpha0=0.5, mu_t=1.0):
    return LemmaModel.at_fixed_point(r, alpha0, mu_t, normalized_sigma(mu_t))


class TestConfig:
    def test_defaults_are_normalized(self):
        config = LemmaConfig()
        assert config.sigma_t == 0.1
        assert abs(0.5 * config.mu_t**2 + config.sigma_t**2 - 1.0) < 1e-9
        assert abs(0.5 * config.mu_v**2 + config.sigma_v**2 - 1.0) < 1e-9

    def test_sigma_derived_from_mu(self):
        config = LemmaConfig(mu_t=1.0, sigma_t=None)
        assert config.sigma_t == pytest.approx(math.sqrt(0.5))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mu_t": 1.0},
            {"mu_t": None, "sigma_t": None},
            {"mu_t": 1.5, "sigma_t": None},
            {"sigma_t": 1.2},
            {"n_train": 101},
            {"r": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            LemmaConfig(**kwargs)

    def test_unnormalized_allowed_when_not_enforced(self):
        config = LemmaConfig(mu_t=1.2, sigma_t=0.1, enforce_normalization=False)
        assert (config.mu_t, config.sigma_t) == (1.2, 0.1)

    def test_normalization_helpers_invert(self):
        for mu in (0.0, 0.5, 1.0, 1.4):
            assert normalized_mu(normalized_sigma(mu)) == pytest.approx(mu)


class TestMixture:
    def test_noise_free(self):
        x, y = gen_mixture(1.0, 0.0, 6)
        assert_allclose(x, y[:, None] * E[None, :])
        assert y.sum() == 0

    def test_odd_size(self):
        with pytest.raises(DatasetError):
            gen_mixture(1.0, 0.5, 7)

    def test_law_of_large_numbers(self):
        mu, sigma = 1.0, normalized_sigma(1.0)
        x, y = gen_mixture(mu, sigma, 400_000, seed=3)
        signed = y[:, None] * x
        assert_allclose(signed.mean(axis=0), mu * E, atol=5e-3)
        assert_allclose(np.cov(signed.T), sigma**2 * np.eye(2), atol=1e-2)
        # normalized data has unit second moment per coordinate
        assert_allclose((x * x).mean(axis=0), [1.0, 1.0], atol=1e-2)

    def test_streams_differ(self):
        data = lemma_datasets(LemmaConfig(n_train=10, n_val=10, n_heldout=10))
        assert not np.allclose(data["train"][0], data["heldout"][0])


class TestQuadrature:
    def test_rules_are_normalized(self):
        nodes, weights = hermite_rule(64)
        assert weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert_allclose(np.sort(nodes), -np.sort(nodes)[::-1], atol=1e-10)
        _, weights = legendre_rule(64)
        assert weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_hermite_rule_matches_normal_moments(self):
        # an n-node rule is exact up to degree 2n - 1
        nodes, weights = hermite_rule(4)
        moments = [np.dot(weights, nodes**k) for k in range(8)]
        assert_allclose(moments, [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0], atol=1e-12)
        nodes, weights = hermite_rule(256)
        assert np.all(np.isfinite(nodes)) and np.all(weights >= 0.0)
        assert np.dot(weights, nodes**2) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize(
        "f, expected",
        [
            (lambda x: np.ones_like(x), 1.0),
            (lambda x: x, 0.0),
            (lambda x: x**2, 1.0),
            (lambda x: x**4, 3.0),
            (np.cos, math.exp(-0.5)),
            (lambda x: 1.0 / (1.0 + np.exp(-5.0 * x)), 0.5),
        ],
    )
    def test_known_expectations(self, f, expected):
        assert gaussian_expectation(f) == pytest.approx(expected, abs=1e-9)

    def test_steep_off_centre_sigmoid(self):
        value = gaussian_expectation(lambda x: 1.0 / (1.0 + np.exp(-400.0 * (x - 0.3))))
        assert value == pytest.approx(0.5 * math.erfc(0.3 / math.sqrt(2.0)), abs=1e-5)

    def test_unresolvable_oscillation(self):
        with pytest.raises(QuadratureError):
            gaussian_expectation(lambda x: np.cos(1e4 * x))


class TestFixedPoint:
    def test_eta(self):
        assert fixed_point_eta(1.0, normalized_sigma(1.0)) == pytest.approx(2.0 / math.sqrt(3.0))
        for mu in (0.3, 0.8, 1.2):
            assert fixed_point_eta(mu, normalized_sigma(mu)) == pytest.approx(2.0 / math.sqrt(2.0 + mu * mu))

    def test_lambda(self):
        assert fixed_point_lambda(0.5, 1.0) == pytest.approx(0.5 + 1.0 / math.sqrt(3.0))
        assert fixed_point_lambda(1.0, 0.7) == 1.0

    def test_model_shape(self):
        model = normalized_fixed_point(2.0)
        assert_allclose(model.w_r, 2.0 * E)
        assert E @ model.W @ E == pytest.approx(2.0 / math.sqrt(3.0))
        assert_allclose(model.v, fixed_point_lambda(0.5, 1.0) * 2.0 * E)

    def test_project(self):
        model = generic_model()
        model.w_r = np.array([3.0, 4.0])
        model.alpha0 = 1.5
        model.project()
        assert np.linalg.norm(model.w_r) == pytest.approx(model.r, abs=1e-12)
        assert 0.0 < model.alpha0 < 1.0


class TestPhaseFunction:
    @pytest.mark.parametrize("r", R_GRID)
    def test_boundary_signs(self, r):
        assert g_function(r, 0.0) > 0.0
        assert g_function(r, 1.0) < 0.0

    @pytest.mark.parametrize("sigma_v", [0.2, 0.5, 0.8])
    def test_decreasing_in_r(self, sigma_v):
        values = [g_function(r, sigma_v) for r in R_GRID]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_sigma_v_range(self):
        with pytest.raises(ValueError):
            g_function(1.0, 1.5)

    def test_sigma0_strictly_decreasing(self):
        roots = [sigma0_of_r(r) for r in R_GRID]
        assert all(0.0 < root < 1.0 for root in roots)
        assert all(b < a for a, b in zip(roots, roots[1:]))

    @pytest.mark.parametrize("r", [0.5, 2.0, 8.0])
    def test_sigma0_is_a_root(self, r):
        assert abs(g_function(r, sigma0_of_r(r, tol=1e-10))) < 1e-7

    def test_sigma0_needs_positive_r(self):
        with pytest.raises(RootFindingError):
            sigma0_of_r(0.0)

    def test_sigma0_sensitivity(self):
        report = sigma0_sensitivity([1.0, 4.0])
        assert len(report.rows) == 6
        reference = {r: s for r, a, s in report.rows if a == 0.5}
        assert reference[1.0] == pytest.approx(sigma0_of_r(1.0))
        assert report.max_relative_deviation >= 0.0


class TestAlphaGradient:
    def test_vanishes_when_eta_is_one(self):
        assert abs(alpha0_gradient_at_fixed_point(2.0, 0.5, mu_t=math.sqrt(2.0))) < 1e-12

    @pytest.mark.parametrize("r", [0.5, 2.0, 8.0])
    def test_sign_flips_at_sigma0(self, r):
        root = sigma0_of_r(r)
        assert alpha0_gradient_at_fixed_point(r, min(root + 1e-3, 1.0)) < 0.0
        assert alpha0_gradient_at_fixed_point(r, root - 1e-3) > 0.0

    def test_follows_g_when_eta_exceeds_one(self):
        for r in (0.5, 2.0):
            for sigma_v in (0.1, 0.4, 0.7, 0.95):
                g = g_function(r, sigma_v)
                grad = alpha0_gradient_at_fixed_point(r, sigma_v)
                if abs(g) > 1e-10 and abs(grad) > 1e-10:
                    assert np.sign(grad) == np.sign(g)

    @pytest.mark.parametrize("r, sigma_v", [(0.5, 0.3), (2.0, 0.6), (5.0, 0.9)])
    def test_general_form_reduces_at_fixed_point(self, r, sigma_v):
        model = normalized_fixed_point(r)
        general = grad_alpha0_closed_form(model, normalized_mu(sigma_v), sigma_v)
        assert general == pytest.approx(alpha0_gradient_at_fixed_point(r, sigma_v), rel=1e-6, abs=1e-9)

    def test_monte_carlo_agrees(self):
        mean, stderr = monte_carlo_alpha0_gradient(2.0, 0.5, n=200_000, seed=1, chunk=50_000)
        assert abs(mean - alpha0_gradient_at_fixed_point(2.0, 0.5)) < 4.0 * stderr

    @pytest.mark.slow
    def test_monte_carlo_grid(self):
        for i, r in enumerate([0.5, 1.0, 2.0, 4.0, 8.0]):
            for j, sigma_v in enumerate([0.1, 0.3, 0.5, 0.7, 0.9]):
                mean, stderr = monte_carlo_alpha0_gradient(r, sigma_v, n=10_000_000, seed=5 * i + j)
                assert abs(mean - alpha0_gradient_at_fixed_point(r, sigma_v)) < 3.0 * stderr


class TestAutodiff:
    def setup_method(self):
        self.model = generic_model()
        self.x, self.y = gen_mixture(0.9, 0.6, 64, seed=2)

    def test_finite_differences(self):
        params = LemmaParams.of(self.model)
        error = finite_diff_check(
            lambda g: lemma_loss(g, params, self.x, self.y), [params.alpha0, params.W, params.w_r]
        )
        assert error < 1e-6

    def test_alpha0_matches_sample_formula(self):
        m = self.model
        o = self.x @ m.v
        s = 1.0 / (1.0 + np.exp(-self.y * o))
        expected = np.mean((s - 1.0) * self.y * (self.x @ m.w_r - self.x @ m.W.T @ m.w_r))
        grad_alpha0, _, _ = lemma_gradients(m, self.x, self.y)
        assert grad_alpha0 == pytest.approx(expected, rel=1e-6)

    def test_expectations_match_a_large_batch(self):
        mu_t, sigma_t = normalized_mu(0.3), 0.3
        mu_v, sigma_v = normalized_mu(0.8), 0.8
        x_t, y_t = gen_mixture(mu_t, sigma_t, 1_000_000, seed=11)
        x_v, y_v = gen_mixture(mu_v, sigma_v, 1_000_000, seed=12)
        _, grad_W, grad_w_r = lemma_gradients(self.model, x_t, y_t)
        grad_alpha0, _, _ = lemma_gradients(self.model, x_v, y_v)

        exact = grad_train_closed_form(self.model, mu_t, sigma_t)
        assert_allclose(grad_W, exact.grad_W, atol=5e-3)
        assert_allclose(grad_w_r, exact.grad_w_r, atol=5e-3)
        assert grad_alpha0 == pytest.approx(grad_alpha0_closed_form(self.model, mu_v, sigma_v), abs=5e-3)


class TestTrainGradients:
    def test_noise_term_is_small_for_small_sigma(self):
        sigma_t = 0.05
        mu_t = normalized_mu(sigma_t)
        model = LemmaModel.at_fixed_point(1.0, 0.5, mu_t, sigma_t)
        assert grad_train_closed_form(model, mu_t, sigma_t).term_ratio < 0.1

    def test_weight_gradient_follows_w_r_e(self):
        sigma_t = 0.1
        mu_t = normalized_mu(sigma_t)
        model = LemmaModel.at_fixed_point(1.0, 0.5, mu_t, sigma_t)
        angle = math.pi / 4 + 0.3
        model.w_r = np.array([math.cos(angle), math.sin(angle)])
        grads = grad_train_closed_form(model, mu_t, sigma_t)
        a, b = grads.grad_W.ravel(), np.outer(model.w_r, E).ravel()
        cosine = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert cosine > math.cos(math.radians(5.0))
        assert_allclose(grads.dominant_W, model.alpha1 * grads.lambda1 * np.outer(model.w_r, E))


def p1_config(seed=0, **kwargs):
    kwargs.setdefault("r", 1.0)
    return LemmaConfig(arch_lr=0.0, epochs=60, n_train=4000, n_val=4000, seed=seed, **kwargs)


def assert_reaches_fixed_point(config):
    trajectory = train_lemma_bilevel(config)
    diagnostics = fixed_point_diagnostics(trajectory.model, config)
    assert diagnostics.cos_wr_e > 0.99
    assert diagnostics.eta_rel_error < 0.05
    assert diagnostics.tx_rel_error < 0.05


class TestTraining:
    def test_trajectory_shape_and_invariants(self):
        config = LemmaConfig(epochs=3, steps_per_epoch=4, n_train=500, n_val=500, n_heldout=100)
        trajectory = train_lemma_bilevel(config)
        assert [e.epoch for e in trajectory.epochs] == [0, 1, 2, 3]
        model = trajectory.model
        assert np.linalg.norm(model.w_r) == pytest.approx(config.r, abs=1e-9)
        assert 0.0 < model.alpha0 < 1.0
        x_train, _ = lemma_datasets(config)["train"]
        assert_allclose(np.std(x_train @ model.W.T, axis=0), [1.0, 1.0], atol=1e-6)

    def test_deterministic(self):
        config = LemmaConfig(epochs=2, n_train=200, n_val=200, n_heldout=100)
        first, second = train_lemma_bilevel(config), train_lemma_bilevel(config)
        assert first.alpha0.tolist() == second.alpha0.tolist()
        assert_allclose(first.model.W, second.model.W, rtol=0, atol=0)

    def test_p1_small_noise(self):
        assert_reaches_fixed_point(p1_config())

    @pytest.mark.parametrize("mu_t", [0.8, 1.0, 1.2])
    def test_p1_unnormalized_means(self, mu_t):
        assert_reaches_fixed_point(p1_config(mu_t=mu_t, sigma_t=0.1, enforce_normalization=False))

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("mu_t", [0.8, 1.0, 1.2])
    def test_p1_seeds(self, seed, mu_t):
        assert_reaches_fixed_point(p1_config(seed, mu_t=mu_t, sigma_t=0.1, enforce_normalization=False))
        assert_reaches_fixed_point(p1_config(seed))

    @pytest.mark.parametrize("r, sigma_v, grows", [(5.0, 0.9, True), (0.5, 0.3, False)])
    def test_p2_alpha0_direction(self, r, sigma_v, grows):
        config = LemmaConfig(
            mu_t=1.0,
            sigma_t=None,
            sigma_v=sigma_v,
            r=r,
            start="fixed_point",
            train_weights=False,
            epochs=20,
            n_val=4000,
            n_train=200,
        )
        alpha0 = train_lemma_bilevel(config).alpha0
        steps = np.diff(alpha0)
        assert np.all(steps > 0.0) if grows else np.all(steps < 0.0)
