import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

MAX_MU = math.sqrt(2.0)
NORMALIZATION_TOL = 1e-9


def normalized_sigma(mu: float) -> float:
    """The noise level that makes 0.5 mu^2 + sigma^2 = 1."""
    return math.sqrt(max(0.0, 1.0 - 0.5 * mu * mu))


def normalized_mu(sigma: float) -> float:
    return math.sqrt(max(0.0, 2.0 * (1.0 - sigma * sigma)))


def _resolve(mu: float | None, sigma: float | None, side: str, enforce: bool) -> tuple[float, float]:
    if mu is None and sigma is None:
        raise ValueError(f"one of mu_{side} and sigma_{side} is required")
    if mu is None:
        if sigma > 1.0:
            raise ValueError(f"sigma_{side} must be at most 1 when mu_{side} is derived")
        mu = normalized_mu(sigma)
    if sigma is None:
        sigma = normalized_sigma(mu)
    if not 0.0 <= mu <= MAX_MU + 1e-12:
        raise ValueError(f"mu_{side} must lie in [0, sqrt(2)], got {mu}")
    if sigma < 0.0:
        raise ValueError(f"sigma_{side} must be non-negative, got {sigma}")
    if enforce and abs(0.5 * mu * mu + sigma * sigma - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"0.5 mu_{side}^2 + sigma_{side}^2 must equal 1, got {0.5 * mu * mu + sigma * sigma}")
    return mu, sigma


class LemmaConfig(BaseModel):
    """
    The two-branch toy model and its Gaussian-mixture data.

    Leave one of mu/sigma unset on each side and it is derived from the
    normalization 0.5 mu^2 + sigma^2 = 1.
    """

    model_config = ConfigDict(extra="forbid")

    mu_t: float | None = None
    sigma_t: float | None = 0.1
    mu_v: float | None = None
    sigma_v: float | None = 0.9
    enforce_normalization: bool = True

    r: float = Field(1.0, gt=0.0)
    alpha0_init: float = Field(0.5, gt=0.0, lt=1.0)
    start: Literal["random", "fixed_point"] = "random"

    n_train: int = Field(10000, ge=2)
    n_val: int = Field(10000, ge=2)
    n_heldout: int = Field(2000, ge=2)
    seed: int = Field(0, ge=0)

    epochs: int = Field(100, ge=0)
    steps_per_epoch: int = Field(10, ge=1)
    weight_lr: float = Field(0.5, ge=0.0)
    arch_lr: float = Field(0.01, ge=0.0)
    train_weights: bool = True

    @model_validator(mode="after")
    def _normalized(self) -> "LemmaConfig":
        self.mu_t, self.sigma_t = _resolve(self.mu_t, self.sigma_t, "t", self.enforce_normalization)
        self.mu_v, self.sigma_v = _resolve(self.mu_v, self.sigma_v, "v", self.enforce_normalization)
        for name in ("n_train", "n_val", "n_heldout"):
            if getattr(self, name) % 2:
                raise ValueError(f"{name} must be even so labels can be balanced")
        return self


class LemmaSweepConfig(BaseModel):
    """Grids for the sigma0 curve and the phase-boundary sweep."""

    model_config = ConfigDict(extra="forbid")

    r_grid: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0])
    sigma_v_grid: list[float] = Field(default_factory=lambda: [0.1, 0.25, 0.4, 0.55, 0.7, 0.85])
    alpha0: float = Field(0.5, gt=0.0, lt=1.0)
    alpha0_grid: list[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75])
    mu_t: float = Field(1.0, ge=0.0, le=MAX_MU)
    tol: float = Field(1e-8, gt=0.0)
    threads: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _grids(self) -> "LemmaSweepConfig":
        if not self.r_grid or any(r <= 0.0 for r in self.r_grid):
            raise ValueError("r_grid must be non-empty with positive values")
        if not self.sigma_v_grid or any(not 0.0 <= s <= 1.0 for s in self.sigma_v_grid):
            raise ValueError("sigma_v_grid must be non-empty with values in [0, 1]")
        if any(not 0.0 < a < 1.0 for a in self.alpha0_grid):
            raise ValueError("alpha0_grid values must lie in (0, 1)")
        return self
