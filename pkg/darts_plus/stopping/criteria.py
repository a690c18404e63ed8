"""
Early-stopping criteria for the search.

Criterion 1 stops once the normal cell of the discretized architecture holds
`threshold` or more skip connections. Criterion 2 stops once the per-edge
ranking of the learnable operations' alpha has been identical for `window`
consecutive epochs.
"""

from collections.abc import Collection, Sequence
from dataclasses import dataclass, field
from enum import Enum

from darts_plus.errors import UnImplementedError
from darts_plus.space import LEARNABLE_OPS, ArchParams, CellKind, OpKind
from darts_plus.stopping.genotype import Genotype, discretize, retained_edges


class Verdict(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


class Criterion(str, Enum):
    SKIP_COUNT = "skip_count"
    RANK_STABLE = "rank_stable"
    BUDGET = "budget"
    INJECTED = "injected"


@dataclass(frozen=True)
class StopDecision:
    verdict: Verdict
    criterion: Criterion | None = None
    epoch: int | None = None
    evidence: str = ""

    def __post_init__(self):
        if self.verdict is Verdict.STOP and (self.criterion is None or self.epoch is None):
            raise ValueError("a stop decision needs a criterion and an epoch")
        if self.verdict is Verdict.CONTINUE and (self.criterion is not None or self.epoch is not None):
            raise ValueError("a continue decision carries no criterion or epoch")

    @classmethod
    def proceed(cls, evidence: str = "") -> "StopDecision":
        return cls(Verdict.CONTINUE, evidence=evidence)

    @classmethod
    def stop(cls, criterion: Criterion, epoch: int, evidence: str) -> "StopDecision":
        return cls(Verdict.STOP, criterion, epoch, evidence)

    @property
    def stopped(self) -> bool:
        return self.verdict is Verdict.STOP

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "criterion": self.criterion.value if self.criterion else None,
            "epoch": self.epoch,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class RankingSnapshot:
    epoch: int
    # (cell kind, edge index, learnable ops by descending alpha)
    rankings: tuple[tuple[CellKind, int, tuple[OpKind, ...]], ...]

    def same_order(self, other: "RankingSnapshot") -> bool:
        return self.rankings == other.rankings


def ranking_snapshot(
    arch: ArchParams,
    epoch: int,
    learnable: Collection[OpKind] | None = None,
    edges: dict[CellKind, Collection[int]] | None = None,
) -> RankingSnapshot:
    learnable = LEARNABLE_OPS if learnable is None else frozenset(learnable)
    columns = [k for k, op in enumerate(arch.candidates) if op in learnable]
    rankings = []
    for kind in CellKind:
        alpha = arch.table(kind).data
        for e in range(alpha.shape[0]):
            if edges is not None and e not in edges[kind]:
                continue
            order = sorted(columns, key=lambda k: (-alpha[e, k], arch.candidates[k].order))
            rankings.append((kind, e, tuple(arch.candidates[k] for k in order)))
    return RankingSnapshot(epoch, tuple(rankings))


def count_skip_connects(genotype: Genotype, kind: CellKind = CellKind.NORMAL) -> int:
    return sum(1 for _, _, op in genotype.cell(kind) if op is OpKind.SKIP_CONNECT)


def criterion1(genotype: Genotype, threshold: int = 2, epoch: int = 0) -> StopDecision:
    count = count_skip_connects(genotype, CellKind.NORMAL)
    evidence = f"{count} skip connections in the normal cell (threshold {threshold})"
    if count >= threshold:
        return StopDecision.stop(Criterion.SKIP_COUNT, epoch, evidence)
    return StopDecision.proceed(evidence)


def criterion2(history: Sequence[RankingSnapshot], window: int = 10) -> StopDecision:
    if window < 1:
        raise ValueError("window must be at least 1")
    if len(history) < window:
        return StopDecision.proceed(f"{len(history)} of {window} epochs observed")
    recent = history[-window:]
    if all(snapshot.same_order(recent[-1]) for snapshot in recent):
        first, last = recent[0].epoch, recent[-1].epoch
        return StopDecision.stop(
            Criterion.RANK_STABLE, last, f"learnable-op ranking unchanged from epoch {first} to epoch {last}"
        )
    return StopDecision.proceed("learnable-op ranking changed within the window")


@dataclass
class EpochObservation:
    epoch: int
    genotype: Genotype
    arch: ArchParams


class Stopper:
    name: str = "stopper"

    def observe(self, observation: EpochObservation) -> StopDecision:
        raise UnImplementedError("observe", self.__class__.__name__)


class NeverStopper(Stopper):
    name = "never"

    def observe(self, observation: EpochObservation) -> StopDecision:
        return StopDecision.proceed()


class InjectedStopper(Stopper):
    name = "injected"

    def __init__(self, at_epoch: int = 1):
        self.at_epoch = at_epoch

    def observe(self, observation: EpochObservation) -> StopDecision:
        if observation.epoch >= self.at_epoch:
            return StopDecision.stop(Criterion.INJECTED, observation.epoch, f"injected stop at epoch {self.at_epoch}")
        return StopDecision.proceed()


class SkipCountStopper(Stopper):
    name = "criterion1"

    def __init__(self, threshold: int = 2):
        self.threshold = threshold

    def observe(self, observation: EpochObservation) -> StopDecision:
        return criterion1(observation.genotype, self.threshold, observation.epoch)


class RankStableStopper(Stopper):
    name = "criterion2"

    def __init__(
        self,
        window: int = 10,
        retained_only: bool = False,
        learnable: Collection[OpKind] | None = None,
    ):
        self.window = window
        self.retained_only = retained_only
        self.learnable = learnable
        self.history: list[RankingSnapshot] = []

    def observe(self, observation: EpochObservation) -> StopDecision:
        edges = None
        if self.retained_only:
            edges = {kind: retained_edges(observation.genotype, kind) for kind in CellKind}
        self.history.append(ranking_snapshot(observation.arch, observation.epoch, self.learnable, edges))
        return criterion2(self.history, self.window)


@dataclass
class StopReport:
    decision: StopDecision
    would_have_stopped: dict[str, int | None] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {**self.decision.to_json_dict(), "would_have_stopped": dict(self.would_have_stopped)}


class CompositeStopper(Stopper):
    """
    Runs several stoppers side by side. The run stops on the primary stopper,
    or on the first one to fire when there is no primary; every stopper's
    first trigger epoch is kept for the report.
    """

    name = "composite"

    def __init__(self, stoppers: Sequence[Stopper], primary: int | None = 0):
        if primary is not None and not 0 <= primary < len(stoppers):
            raise ValueError(f"primary index {primary} out of range")
        self.stoppers = list(stoppers)
        self.primary = primary
        self.triggers: dict[str, int | None] = {s.name: None for s in self.stoppers}

    def observe(self, observation: EpochObservation) -> StopDecision:
        decisions = [s.observe(observation) for s in self.stoppers]
        for stopper, decision in zip(self.stoppers, decisions):
            if decision.stopped and self.triggers[stopper.name] is None:
                self.triggers[stopper.name] = decision.epoch
        if self.primary is not None:
            return decisions[self.primary]
        for decision in decisions:
            if decision.stopped:
                return decision
        return StopDecision.proceed()

    def report(self, decision: StopDecision) -> StopReport:
        others = {
            name: epoch
            for k, (name, epoch) in enumerate(self.triggers.items())
            if k != self.primary
        }
        return StopReport(decision, others)


def compose_stoppers(stoppers: Sequence[Stopper], primary: int | None = 0) -> CompositeStopper:
    return CompositeStopper(stoppers, primary)


def observe_arch(stopper: Stopper, arch: ArchParams, epoch: int) -> StopDecision:
    return stopper.observe(EpochObservation(epoch, discretize(arch), arch))
