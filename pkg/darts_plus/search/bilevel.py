"""
First-order bi-level search.

Every batch step first moves alpha by one Adam step on a validation batch
with the weights held fixed, then moves the weights by one SGD step on a
training batch with alpha held fixed. After each epoch the architecture is
discretized, the epoch is recorded and the stopper is consulted.
"""

import time
from dataclasses import dataclass

import numpy as np

from darts_plus.errors import DatasetError, NonFiniteError
from darts_plus.logs import get_logger
from darts_plus.search.config import SearchConfig
from darts_plus.search.data import Dataset, split_data
from darts_plus.space import (
    ARCH_STEP,
    EVAL,
    WEIGHT_STEP,
    ArchParams,
    CellKind,
    ForwardMode,
    SpaceConfig,
    Supernet,
)
from darts_plus.stopping import (
    CompositeStopper,
    Criterion,
    EpochObservation,
    Genotype,
    StopDecision,
    Stopper,
    StopReport,
    count_skip_connects,
    discretize,
    ranking_snapshot,
)
from darts_plus.tensor import (
    Graph,
    OptimizerState,
    Tensor,
    adam_state,
    adam_step,
    clip_grad_norm,
    cosine_lr,
    sgd_state,
    sgd_step,
    zero_grad,
)

logger = get_logger(__name__)

Batch = tuple[np.ndarray, np.ndarray]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    genotype: Genotype
    alpha: dict[str, list[list[float]]]
    ranking: list[list]
    skip_count_normal: int
    skip_count_reduction: int
    feature_dispersion: float
    wall_time: float = 0.0

    @property
    def accuracy_gap(self) -> float:
        return self.train_acc - self.val_acc

    def to_json_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "train_acc": self.train_acc,
            "val_loss": self.val_loss,
            "val_acc": self.val_acc,
            "skip_count_normal": self.skip_count_normal,
            "skip_count_reduction": self.skip_count_reduction,
            "feature_dispersion": self.feature_dispersion,
            "genotype": self.genotype.to_json_dict(),
            "alpha": self.alpha,
            "ranking": self.ranking,
            "wall_time": self.wall_time,
        }


@dataclass
class SearchState:
    net: Supernet
    arch: ArchParams
    weight_optimizer: OptimizerState
    arch_optimizer: OptimizerState
    rng: np.random.Generator

    @classmethod
    def create(cls, config: SearchConfig, space: SpaceConfig) -> "SearchState":
        rng = np.random.default_rng(config.seed)
        net = Supernet(space, rng)
        arch = ArchParams.initialize(space.num_nodes, space.candidates, rng, space.alpha_init_scale)
        return cls(
            net=net,
            arch=arch,
            weight_optimizer=sgd_state(config.weight_lr, config.weight_momentum, config.weight_decay),
            arch_optimizer=adam_state(config.arch_lr, config.arch_betas, config.arch_weight_decay),
            rng=rng,
        )


def batch_loss(g: Graph, net: Supernet, arch: ArchParams, batch: Batch, mode: ForwardMode) -> Tensor:
    images, labels = batch
    logits = net(g, Tensor(images), arch, mode)
    return g.forward_op("cross_entropy", [logits], labels=labels)


def alpha_step(
    net: Supernet,
    arch: ArchParams,
    val_batch: Batch,
    state: OptimizerState,
    step: int | None = None,
) -> float:
    """One Adam step on alpha against the validation loss at the current weights."""
    params = arch.parameters()
    zero_grad(params)
    g = Graph()
    try:
        loss = batch_loss(g, net, arch, val_batch, ARCH_STEP)
        g.backward(loss)
    except NonFiniteError as exc:
        raise NonFiniteError(f"alpha step ({exc.where})", step) from exc
    adam_step(state, params)
    return loss.item()


def weight_step(
    net: Supernet,
    arch: ArchParams,
    train_batch: Batch,
    state: OptimizerState,
    clip: float | None = None,
    step: int | None = None,
) -> float:
    """One SGD step on the network weights against the training loss at the current alpha."""
    params = net.parameters()
    zero_grad(params)
    g = Graph()
    try:
        loss = batch_loss(g, net, arch, train_batch, WEIGHT_STEP)
        g.backward(loss)
    except NonFiniteError as exc:
        raise NonFiniteError(f"weight step ({exc.where})", step) from exc
    if clip is not None:
        clip_grad_norm(params, clip)
    sgd_step(state, params)
    return loss.item()


def evaluate(net: Supernet, arch: ArchParams, dataset: Dataset, batch_size: int) -> tuple[float, float]:
    """Mean loss and accuracy over the whole dataset with running statistics."""
    total_loss, correct = 0.0, 0
    for start in range(0, len(dataset), batch_size):
        images = dataset.images[start : start + batch_size]
        labels = dataset.labels[start : start + batch_size]
        g = Graph()
        logits = net(g, Tensor(images), arch, EVAL)
        loss = g.forward_op("cross_entropy", [logits], labels=labels)
        total_loss += loss.item() * labels.shape[0]
        correct += int(np.sum(np.argmax(logits.data, axis=1) == labels))
    return total_loss / len(dataset), correct / len(dataset)


def feature_dispersion(net: Supernet, arch: ArchParams, dataset: Dataset, batch_size: int) -> float:
    """Within-class over total standard deviation of the pooled features, averaged over channels."""
    chunks = []
    for start in range(0, len(dataset), batch_size):
        g = Graph()
        chunks.append(net.features(g, Tensor(dataset.images[start : start + batch_size]), arch, EVAL).data)
    features = np.concatenate(chunks)
    total = features.var(axis=0)
    within = np.zeros_like(total)
    for label in np.unique(dataset.labels):
        members = features[dataset.labels == label]
        within += members.shape[0] * members.var(axis=0)
    within /= features.shape[0]
    usable = total > 1e-24
    if not usable.any():
        return 0.0
    return float(np.mean(np.sqrt(within[usable] / total[usable])))


def _ranking_rows(arch: ArchParams, epoch: int) -> list[list]:
    snapshot = ranking_snapshot(arch, epoch)
    return [[kind.value, edge, [op.value for op in ops]] for kind, edge, ops in snapshot.rankings]


def run_search(
    config: SearchConfig,
    dataset: Dataset,
    stopper: Stopper,
    space: SpaceConfig | None = None,
) -> tuple[list[EpochRecord], Genotype, StopReport]:
    space = space or SpaceConfig()
    train, val = split_data(dataset, (config.train_fraction, config.val_fraction), config.seed)
    if min(len(train), len(val)) < config.batch_size:
        raise DatasetError(
            f"train/val parts of {len(train)}/{len(val)} samples cannot fill a batch of {config.batch_size}"
        )

    state = SearchState.create(config, space)
    records: list[EpochRecord] = []
    decision = StopDecision.proceed()
    step = 0
    logger.info(
        f"search started: {config.max_epochs} epochs, {len(train)} train / {len(val)} val samples, seed {config.seed}"
    )

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        state.weight_optimizer.lr = cosine_lr(epoch - 1, config.max_epochs, config.weight_lr, config.weight_lr_min)
        batches = zip(
            train.batches(config.batch_size, state.rng),
            val.batches(config.batch_size, state.rng),
        )
        for train_batch, val_batch in batches:
            step += 1
            val_loss = alpha_step(state.net, state.arch, val_batch, state.arch_optimizer, step)
            train_loss = weight_step(
                state.net, state.arch, train_batch, state.weight_optimizer, config.grad_clip, step
            )
            logger.debug(f"step {step}: train loss {train_loss:.4f}, val loss {val_loss:.4f}")

        genotype = discretize(state.arch)
        train_loss, train_acc = evaluate(state.net, state.arch, train, config.batch_size)
        val_loss, val_acc = evaluate(state.net, state.arch, val, config.batch_size)
        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            train_acc=train_acc,
            val_loss=val_loss,
            val_acc=val_acc,
            genotype=genotype,
            alpha=state.arch.snapshot(),
            ranking=_ranking_rows(state.arch, epoch),
            skip_count_normal=count_skip_connects(genotype, CellKind.NORMAL),
            skip_count_reduction=count_skip_connects(genotype, CellKind.REDUCE),
            feature_dispersion=feature_dispersion(state.net, state.arch, val, config.batch_size),
            wall_time=time.perf_counter() - started,
        )
        records.append(record)
        logger.info(
            f"epoch {epoch}: train acc {train_acc:.3f}, val acc {val_acc:.3f}, "
            f"skip (normal) {record.skip_count_normal}, lr {state.weight_optimizer.lr:.5f}"
        )

        decision = stopper.observe(EpochObservation(epoch, genotype, state.arch))
        if decision.stopped:
            logger.info(f"stopped at epoch {epoch} by {decision.criterion.value}: {decision.evidence}")
            break
    else:
        decision = StopDecision.stop(
            Criterion.BUDGET, config.max_epochs, f"epoch budget of {config.max_epochs} exhausted"
        )
        logger.info(decision.evidence)

    if isinstance(stopper, CompositeStopper):
        report = stopper.report(decision)
    else:
        report = StopReport(decision)
    return records, records[-1].genotype, report
