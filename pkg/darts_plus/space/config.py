from pydantic import BaseModel, ConfigDict, Field, field_validator

from darts_plus.space.ops import CANONICAL_ORDER, OpKind


class SpaceConfig(BaseModel):
    """Shape of the one-shot model. Defaults are a desk-scale DARTS network."""

    model_config = ConfigDict(extra="forbid")

    channels: int = Field(8, ge=1)
    layers: int = Field(8, ge=1)
    num_nodes: int = Field(7, ge=4)
    stem_multiplier: int = Field(3, ge=1)
    in_channels: int = Field(1, ge=1)
    num_classes: int = Field(4, ge=2)
    candidates: list[OpKind] = Field(default_factory=lambda: list(CANONICAL_ORDER))
    alpha_init_scale: float = Field(1e-3, ge=0.0)

    @field_validator("candidates")
    @classmethod
    def _canonical_candidates(cls, value: list[OpKind]) -> list[OpKind]:
        if not value:
            raise ValueError("at least one candidate operation is required")
        if len(set(value)) != len(value):
            raise ValueError("candidate operations must be unique")
        return sorted(value, key=lambda kind: kind.order)
