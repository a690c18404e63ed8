from darts_plus.stopping.config import Criterion1Config, Criterion2Config, StoppingConfig, build_stopper
from darts_plus.stopping.criteria import (
    CompositeStopper,
    Criterion,
    EpochObservation,
    InjectedStopper,
    NeverStopper,
    RankingSnapshot,
    RankStableStopper,
    SkipCountStopper,
    StopDecision,
    Stopper,
    StopReport,
    Verdict,
    compose_stoppers,
    count_skip_connects,
    criterion1,
    criterion2,
    observe_arch,
    ranking_snapshot,
)
from darts_plus.stopping.genotype import Genotype, Triple, discretize, retained_edges

__all__ = [
    "Criterion1Config",
    "Criterion2Config",
    "StoppingConfig",
    "build_stopper",
    "CompositeStopper",
    "Criterion",
    "EpochObservation",
    "InjectedStopper",
    "NeverStopper",
    "RankingSnapshot",
    "RankStableStopper",
    "SkipCountStopper",
    "StopDecision",
    "Stopper",
    "StopReport",
    "Verdict",
    "compose_stoppers",
    "count_skip_connects",
    "criterion1",
    "criterion2",
    "observe_arch",
    "ranking_snapshot",
    "Genotype",
    "Triple",
    "discretize",
    "retained_edges",
]
