from pydantic import BaseModel, ConfigDict, Field, model_validator


class DataConfig(BaseModel):
    """The built-in texture task."""

    model_config = ConfigDict(extra="forbid")

    num_samples: int = Field(512, ge=4)
    num_test: int = Field(512, ge=1)
    image_size: int = Field(8, ge=3)
    noise: float = Field(0.8, ge=0.0)


class SearchConfig(BaseModel):
    """Bi-level search defaults follow the usual DARTS settings."""

    model_config = ConfigDict(extra="forbid")

    max_epochs: int = Field(60, ge=1)
    seed: int = Field(0, ge=0)
    batch_size: int = Field(64, ge=1)

    weight_lr: float = Field(0.025, ge=0.0)
    weight_lr_min: float = Field(0.0, ge=0.0)
    weight_momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(3e-4, ge=0.0)
    grad_clip: float | None = Field(5.0, gt=0.0)

    arch_lr: float = Field(3e-4, ge=0.0)
    arch_betas: tuple[float, float] = (0.5, 0.999)
    arch_weight_decay: float = Field(1e-3, ge=0.0)

    train_fraction: float = Field(0.5, gt=0.0, lt=1.0)
    val_fraction: float = Field(0.5, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _fractions_fit(self) -> "SearchConfig":
        if self.train_fraction + self.val_fraction > 1.0 + 1e-12:
            raise ValueError("train_fraction + val_fraction must not exceed 1")
        if self.weight_lr_min > self.weight_lr:
            raise ValueError("weight_lr_min must not exceed weight_lr")
        for beta in self.arch_betas:
            if not 0.0 <= beta < 1.0:
                raise ValueError("arch_betas must lie in [0, 1)")
        return self
