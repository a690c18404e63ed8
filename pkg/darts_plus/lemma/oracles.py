"""
Expectation-level gradients of the toy model, the phase function g and its
root sigma0(r).

For data y x = mu e + sigma eps and v = W_alpha^T w_r the mean logistic loss
has dL/dv = lambda1 e + lambda2 v with

    lambda1 = mu E[s(m) - 1],  lambda2 = sigma / ||v|| E[(s(m) - 1) eps0],
    m = mu v^T e + sigma ||v|| eps0,

so every gradient below reduces to one-dimensional Gaussian expectations.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from darts_plus.errors import RootFindingError
from darts_plus.lemma.config import normalized_mu, normalized_sigma
from darts_plus.lemma.model import E, LemmaModel, fixed_point_eta
from darts_plus.lemma.quadrature import TOLERANCE, gaussian_expectation
from darts_plus.logs import get_logger

logger = get_logger(__name__)


def sigmoid_minus_one(t: np.ndarray) -> np.ndarray:
    return -np.exp(-np.logaddexp(0.0, t))


def fixed_point_lambda(alpha0: float, mu_t: float, sigma_t: float | None = None) -> float:
    """lambda = alpha0 + alpha1 eta; with normalized data eta = 2 / sqrt(2 + mu_t^2)."""
    sigma_t = normalized_sigma(mu_t) if sigma_t is None else sigma_t
    return alpha0 + (1.0 - alpha0) * fixed_point_eta(mu_t, sigma_t)


def loss_direction(v: np.ndarray, mu: float, sigma: float, tol: float = TOLERANCE) -> tuple[float, float]:
    """(lambda1, lambda2) of dL/dv for the mixture (mu, sigma)."""
    norm = float(np.linalg.norm(v))
    a, b = mu * float(v @ E), sigma * norm
    lambda1 = mu * gaussian_expectation(lambda eps: sigmoid_minus_one(a + b * eps), tol)
    if norm == 0.0 or sigma == 0.0:
        return lambda1, 0.0
    lambda2 = sigma / norm * gaussian_expectation(lambda eps: sigmoid_minus_one(a + b * eps) * eps, tol)
    return lambda1, lambda2


@dataclass
class TrainGradients:
    lambda1: float
    lambda2: float
    v: np.ndarray
    grad_w_r: np.ndarray
    grad_W: np.ndarray
    dominant_w_r: np.ndarray
    dominant_W: np.ndarray

    @property
    def term_ratio(self) -> float:
        """||lambda2 v|| / ||lambda1 e||."""
        return abs(self.lambda2) * float(np.linalg.norm(self.v)) / max(abs(self.lambda1), 1e-300)


def grad_train_closed_form(model: LemmaModel, mu_t: float, sigma_t: float, tol: float = TOLERANCE) -> TrainGradients:
    """Exact expected training gradients and their lambda1-only approximations."""
    v = model.v
    lambda1, lambda2 = loss_direction(v, mu_t, sigma_t, tol)
    dv = lambda1 * E + lambda2 * v
    return TrainGradients(
        lambda1=lambda1,
        lambda2=lambda2,
        v=v,
        grad_w_r=model.W_alpha @ dv,
        grad_W=model.alpha1 * np.outer(model.w_r, dv),
        dominant_w_r=lambda1 * (model.W_alpha @ E),
        dominant_W=model.alpha1 * lambda1 * np.outer(model.w_r, E),
    )


def grad_alpha0_closed_form(model: LemmaModel, mu_v: float, sigma_v: float, tol: float = TOLERANCE) -> float:
    """
    Expected dL_val/dalpha0 = (w_r - W^T w_r) . dL/dv under the validation
    mixture. At w_r = r e, W = eta e e^T this is
    r (1 - eta) E[(s(r lambda z) - 1) z] with z = mu_v + sigma_v eps.
    """
    lambda1, lambda2 = loss_direction(model.v, mu_v, sigma_v, tol)
    branch = model.w_r - model.W.T @ model.w_r
    return float(branch @ (lambda1 * E + lambda2 * model.v))


def g_function(r: float, sigma_v: float, alpha0: float = 0.5, mu_t: float = 1.0, tol: float = TOLERANCE) -> float:
    """g(r, sigma_v) = -E[(s(r lambda z) - 1) z], z = mu_v + sigma_v eps, mu_v = sqrt(2 (1 - sigma_v^2))."""
    if not 0.0 <= sigma_v <= 1.0:
        raise ValueError(f"sigma_v must lie in [0, 1], got {sigma_v}")
    lam = fixed_point_lambda(alpha0, mu_t)
    mu_v = normalized_mu(sigma_v)

    def integrand(eps: np.ndarray) -> np.ndarray:
        z = mu_v + sigma_v * eps
        return -sigmoid_minus_one(r * lam * z) * z

    return gaussian_expectation(integrand, tol)


def alpha0_gradient_at_fixed_point(
    r: float, sigma_v: float, alpha0: float = 0.5, mu_t: float = 1.0, tol: float = TOLERANCE
) -> float:
    """r (eta - 1) g(r, sigma_v): the validation gradient of alpha0 at the trained fixed point."""
    eta = fixed_point_eta(mu_t, normalized_sigma(mu_t))
    return r * (eta - 1.0) * g_function(r, sigma_v, alpha0, mu_t, tol)


def sigma0_of_r(r: float, alpha0: float = 0.5, mu_t: float = 1.0, tol: float = 1e-8) -> float:
    """Root of g(r, .) on (0, 1) by bisection."""
    if r <= 0.0:
        raise RootFindingError(f"r must be positive, got {r}")
    lo, hi = 0.0, 1.0
    g_lo, g_hi = g_function(r, lo, alpha0, mu_t), g_function(r, hi, alpha0, mu_t)
    if not (g_lo > 0.0 > g_hi):
        raise RootFindingError(f"g(r={r}, .) has no sign change on [0, 1]: g(0)={g_lo:.3e}, g(1)={g_hi:.3e}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g_function(r, mid, alpha0, mu_t) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    logger.debug(f"sigma0({r}) = {root:.9f} at alpha0 {alpha0}")
    return root


@dataclass
class Sigma0Sensitivity:
    rows: list[tuple[float, float, float]]  # (r, alpha0, sigma0)
    max_relative_deviation: float


def sigma0_sensitivity(
    r_grid: Sequence[float],
    alpha0_grid: Sequence[float] = (0.25, 0.5, 0.75),
    reference_alpha0: float = 0.5,
    mu_t: float = 1.0,
    tol: float = 1e-8,
) -> Sigma0Sensitivity:
    """sigma0(r) over several alpha0; deviation is measured against the reference alpha0."""
    rows, worst = [], 0.0
    for r in r_grid:
        reference = sigma0_of_r(r, reference_alpha0, mu_t, tol)
        for alpha0 in alpha0_grid:
            value = reference if alpha0 == reference_alpha0 else sigma0_of_r(r, alpha0, mu_t, tol)
            rows.append((r, alpha0, value))
            worst = max(worst, abs(value - reference) / reference)
    return Sigma0Sensitivity(rows, worst)


def monte_carlo_alpha0_gradient(
    r: float,
    sigma_v: float,
    alpha0: float = 0.5,
    mu_t: float = 1.0,
    n: int = 10_000_000,
    seed: int = 0,
    chunk: int = 1_000_000,
) -> tuple[float, float]:
    """Sampled r (1 - eta) E[(s(r lambda z) - 1) z]: (mean, standard error)."""
    rng = np.random.default_rng(seed)
    eta = fixed_point_eta(mu_t, normalized_sigma(mu_t))
    lam = fixed_point_lambda(alpha0, mu_t)
    mu_v = normalized_mu(sigma_v)
    total = total_sq = 0.0
    done = 0
    while done < n:
        size = min(chunk, n - done)
        z = mu_v + sigma_v * rng.standard_normal(size)
        h = r * (1.0 - eta) * sigmoid_minus_one(r * lam * z) * z
        total += float(h.sum())
        total_sq += float((h * h).sum())
        done += size
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return mean, float(np.sqrt(var / n))
