from darts_plus.lemma.config import LemmaConfig, LemmaSweepConfig, normalized_mu, normalized_sigma
from darts_plus.lemma.model import (
    E,
    FixedPointDiagnostics,
    LemmaEpoch,
    LemmaModel,
    LemmaParams,
    LemmaTrajectory,
    fixed_point_diagnostics,
    fixed_point_eta,
    gen_mixture,
    lemma_datasets,
    lemma_gradients,
    lemma_loss,
    train_lemma_bilevel,
)
from darts_plus.lemma.oracles import (
    Sigma0Sensitivity,
    TrainGradients,
    alpha0_gradient_at_fixed_point,
    fixed_point_lambda,
    g_function,
    grad_alpha0_closed_form,
    grad_train_closed_form,
    loss_direction,
    monte_carlo_alpha0_gradient,
    sigma0_of_r,
    sigma0_sensitivity,
)
from darts_plus.lemma.quadrature import gaussian_expectation, hermite_rule, legendre_rule

__all__ = [
    "LemmaConfig",
    "LemmaSweepConfig",
    "normalized_mu",
    "normalized_sigma",
    "E",
    "FixedPointDiagnostics",
    "LemmaEpoch",
    "LemmaModel",
    "LemmaParams",
    "LemmaTrajectory",
    "fixed_point_diagnostics",
    "fixed_point_eta",
    "gen_mixture",
    "lemma_datasets",
    "lemma_gradients",
    "lemma_loss",
    "train_lemma_bilevel",
    "Sigma0Sensitivity",
    "TrainGradients",
    "alpha0_gradient_at_fixed_point",
    "fixed_point_lambda",
    "g_function",
    "grad_alpha0_closed_form",
    "grad_train_closed_form",
    "loss_direction",
    "monte_carlo_alpha0_gradient",
    "sigma0_of_r",
    "sigma0_sensitivity",
    "gaussian_expectation",
    "hermite_rule",
    "legendre_rule",
]
