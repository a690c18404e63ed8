from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from darts_plus.space import OpKind
from darts_plus.stopping.criteria import (
    CompositeStopper,
    InjectedStopper,
    NeverStopper,
    RankStableStopper,
    SkipCountStopper,
    Stopper,
    compose_stoppers,
)


class Criterion1Config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    threshold: int = Field(2, ge=1)


class Criterion2Config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    window: int = Field(10, ge=1)
    edges: Literal["all", "retained"] = "all"
    # None means the four convolutions
    learnable: list[OpKind] | None = None


class StoppingConfig(BaseModel):
    """Which criterion ends the run. The other criterion is still tracked for the report."""

    model_config = ConfigDict(extra="forbid")

    primary: Literal["criterion1", "criterion2", "any", "none"] = "none"
    inject_at: int | None = Field(None, ge=1)


def build_stopper(
    stopping: StoppingConfig,
    criterion1: Criterion1Config,
    criterion2: Criterion2Config,
) -> CompositeStopper:
    stoppers: list[Stopper] = [
        SkipCountStopper(criterion1.threshold),
        RankStableStopper(criterion2.window, criterion2.edges == "retained", criterion2.learnable),
    ]
    if stopping.inject_at is not None:
        stoppers.insert(0, InjectedStopper(stopping.inject_at))
        return compose_stoppers(stoppers, primary=0)
    if stopping.primary == "none":
        stoppers.insert(0, NeverStopper())
        return compose_stoppers(stoppers, primary=0)
    if stopping.primary == "any":
        return compose_stoppers(stoppers, primary=None)
    return compose_stoppers(stoppers, primary=0 if stopping.primary == "criterion1" else 1)
