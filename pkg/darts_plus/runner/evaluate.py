"""
Evaluation of a discrete architecture: the network is rebuilt from a genotype
with one fixed operation per retained edge, trained from scratch on the full
texture training set and scored on the held-out test split.
"""

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from darts_plus.logs import get_logger
from darts_plus.search import DataConfig, Dataset, make_texture_dataset
from darts_plus.space import (
    EVAL,
    WEIGHT_STEP,
    BatchNorm2d,
    CellKind,
    CellSpec,
    Conv,
    ForwardMode,
    Linear,
    Module,
    ReLUConvBN,
    SpaceConfig,
    build_op,
    count_learnable_params,
    reduction_layers,
)
from darts_plus.stopping import Genotype, Triple
from darts_plus.tensor import Graph, Tensor, clip_grad_norm, cosine_lr, sgd_state, sgd_step, zero_grad

logger = get_logger(__name__)

# weight init and batch order; streams 0 and 1 generate the data
NETWORK_STREAM = 2


class EvalConfig(BaseModel):
    """Training of the discrete network. Depth and width come from the search space."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(10, ge=0)
    batch_size: int = Field(64, ge=1)
    lr: float = Field(0.025, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(3e-4, ge=0.0)
    grad_clip: float | None = Field(5.0, gt=0.0)


class DiscreteCell(Module):
    def __init__(
        self,
        spec: CellSpec,
        triples: tuple[Triple, ...],
        c_prev_prev: int,
        c_prev: int,
        channels: int,
        reduction_prev: bool,
        rng: np.random.Generator,
    ):
        self.spec = spec
        self.triples = triples
        self.preprocess0 = ReLUConvBN(c_prev_prev, channels, rng, stride=2 if reduction_prev else 1)
        self.preprocess1 = ReLUConvBN(c_prev, channels, rng)
        self.ops = [build_op(op, channels, spec.stride(source), rng) for _, source, op in triples]

    def __call__(self, g: Graph, s0: Tensor, s1: Tensor, mode: ForwardMode) -> Tensor:
        states = [self.preprocess0(g, s0, mode), self.preprocess1(g, s1, mode)]
        for node in self.spec.intermediate_nodes:
            total = None
            for (target, source, _), op in zip(self.triples, self.ops):
                if target != node:
                    continue
                out = op(g, states[source], mode)
                total = out if total is None else g.forward_op("add", [total, out])
            states.append(total)
        return g.forward_op("concat", states[2:], axis=1)


class DiscreteNetwork(Module):
    """Same skeleton as the supernet with every mixed edge replaced by its chosen op."""

    def __init__(self, genotype: Genotype, space: SpaceConfig, rng: np.random.Generator):
        genotype.validate()
        c = space.channels
        c_curr = space.stem_multiplier * c
        self.stem_conv = Conv(space.in_channels, c_curr, 3, rng, padding=1)
        self.stem_bn = BatchNorm2d(c_curr)

        c_prev_prev, c_prev, c_curr = c_curr, c_curr, c
        reductions = reduction_layers(space.layers)
        reduction_prev = False
        self.cells: list[DiscreteCell] = []
        for layer in range(space.layers):
            kind = CellKind.REDUCE if layer in reductions else CellKind.NORMAL
            if kind is CellKind.REDUCE:
                c_curr *= 2
            spec = CellSpec(genotype.num_nodes, kind)
            self.cells.append(
                DiscreteCell(spec, genotype.cell(kind), c_prev_prev, c_prev, c_curr, reduction_prev, rng)
            )
            reduction_prev = kind is CellKind.REDUCE
            c_prev_prev, c_prev = c_prev, spec.num_intermediate * c_curr
        self.classifier = Linear(c_prev, space.num_classes, rng)

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode = EVAL) -> Tensor:
        s = self.stem_bn(g, self.stem_conv(g, x), mode)
        s0 = s1 = s
        for cell in self.cells:
            s0, s1 = s1, cell(g, s0, s1, mode)
        return self.classifier(g, g.forward_op("global_avg_pool", [s1]))


@dataclass
class EvalReport:
    test_acc: float
    train_acc: float
    epochs: int
    seed: int
    num_params: int

    def to_json_dict(self) -> dict:
        return dict(vars(self))


def _accuracy(net: DiscreteNetwork, dataset: Dataset, batch_size: int) -> float:
    correct = 0
    for start in range(0, len(dataset), batch_size):
        g = Graph()
        logits = net(g, Tensor(dataset.images[start : start + batch_size]), EVAL)
        correct += int(np.sum(np.argmax(logits.data, axis=1) == dataset.labels[start : start + batch_size]))
    return correct / len(dataset)


def eval_genotype(
    genotype: Genotype,
    config: EvalConfig,
    data: DataConfig,
    space: SpaceConfig,
    seed: int = 0,
) -> EvalReport:
    train = make_texture_dataset(data.num_samples, space.num_classes, data.image_size, data.noise, seed, "train")
    test = make_texture_dataset(data.num_test, space.num_classes, data.image_size, data.noise, seed, "test")
    rng = np.random.default_rng([seed, NETWORK_STREAM])
    net = DiscreteNetwork(genotype, space, rng)
    params = net.parameters()
    optimizer = sgd_state(config.lr, config.momentum, config.weight_decay)
    batch_size = min(config.batch_size, len(train))

    for epoch in range(config.epochs):
        optimizer.lr = cosine_lr(epoch, config.epochs, config.lr)
        for images, labels in train.batches(batch_size, rng):
            zero_grad(params)
            g = Graph()
            logits = net(g, Tensor(images), WEIGHT_STEP)
            g.backward(g.forward_op("cross_entropy", [logits], labels=labels))
            if config.grad_clip is not None:
                clip_grad_norm(params, config.grad_clip)
            sgd_step(optimizer, params)
        logger.debug(f"eval epoch {epoch + 1}/{config.epochs} done")

    report = EvalReport(
        test_acc=_accuracy(net, test, config.batch_size),
        train_acc=_accuracy(net, train, config.batch_size),
        epochs=config.epochs,
        seed=seed,
        num_params=count_learnable_params(net),
    )
    logger.info(f"genotype evaluated: test acc {report.test_acc:.4f}, train acc {report.train_acc:.4f}")
    return report
