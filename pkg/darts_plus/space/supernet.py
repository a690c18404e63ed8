"""
The one-shot model: a stem, a stack of cells sharing one architecture table
per cell kind, and a global-pool + linear classifier.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from darts_plus.space.cell import Cell, CellKind, CellSpec
from darts_plus.space.config import SpaceConfig
from darts_plus.space.layers import EVAL, BatchNorm2d, Conv, ForwardMode, Linear, Module
from darts_plus.space.ops import OpKind
from darts_plus.tensor import Graph, Tensor


@dataclass
class ArchParams:
    """alpha[kind][edge, candidate]; one table per cell kind, shared by all its cells."""

    normal: Tensor
    reduce: Tensor
    candidates: tuple[OpKind, ...]
    num_nodes: int

    @classmethod
    def initialize(
        cls,
        num_nodes: int,
        candidates: Sequence[OpKind],
        rng: np.random.Generator,
        scale: float = 1e-3,
    ) -> "ArchParams":
        shape = (CellSpec(num_nodes).num_edges, len(candidates))
        return cls(
            normal=Tensor.parameter(scale * rng.standard_normal(shape), name="alpha.normal"),
            reduce=Tensor.parameter(scale * rng.standard_normal(shape), name="alpha.reduce"),
            candidates=tuple(candidates),
            num_nodes=num_nodes,
        )

    @classmethod
    def from_arrays(
        cls, normal: np.ndarray, reduce: np.ndarray, candidates: Sequence[OpKind], num_nodes: int
    ) -> "ArchParams":
        return cls(
            Tensor.parameter(normal, name="alpha.normal"),
            Tensor.parameter(reduce, name="alpha.reduce"),
            tuple(candidates),
            num_nodes,
        )

    def table(self, kind: CellKind) -> Tensor:
        return self.normal if kind is CellKind.NORMAL else self.reduce

    def parameters(self) -> list[Tensor]:
        return [self.normal, self.reduce]

    def spec(self, kind: CellKind) -> CellSpec:
        return CellSpec(self.num_nodes, kind)

    def snapshot(self) -> dict[str, list[list[float]]]:
        return {kind.value: self.table(kind).data.tolist() for kind in CellKind}

    def probabilities(self, kind: CellKind) -> np.ndarray:
        alpha = self.table(kind).data
        e = np.exp(alpha - alpha.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)


def reduction_layers(layers: int) -> set[int]:
    return {layers // 3, 2 * layers // 3}


class Supernet(Module):
    def __init__(self, config: SpaceConfig, rng: np.random.Generator):
        self.config = config
        c = config.channels
        c_curr = config.stem_multiplier * c
        self.stem_conv = Conv(config.in_channels, c_curr, 3, rng, padding=1)
        self.stem_bn = BatchNorm2d(c_curr)

        c_prev_prev, c_prev, c_curr = c_curr, c_curr, c
        reductions = reduction_layers(config.layers)
        reduction_prev = False
        self.cells: list[Cell] = []
        for layer in range(config.layers):
            reduction = layer in reductions
            if reduction:
                c_curr *= 2
            spec = CellSpec(config.num_nodes, CellKind.REDUCE if reduction else CellKind.NORMAL)
            cell = Cell(spec, c_prev_prev, c_prev, c_curr, reduction_prev, config.candidates, rng)
            self.cells.append(cell)
            reduction_prev = reduction
            c_prev_prev, c_prev = c_prev, spec.num_intermediate * c_curr
        self.classifier = Linear(c_prev, config.num_classes, rng)

    def features(
        self,
        g: Graph,
        x: Tensor,
        arch: ArchParams,
        mode: ForwardMode = EVAL,
        trace: list[Tensor] | None = None,
    ) -> Tensor:
        """Globally pooled output of the last cell, [B, C]."""
        s = self.stem_bn(g, self.stem_conv(g, x), mode)
        weights = {kind: g.forward_op("softmax", [arch.table(kind)], axis=1) for kind in CellKind}
        s0 = s1 = s
        for cell in self.cells:
            s0, s1 = s1, cell(g, s0, s1, weights[cell.kind], mode)
            if trace is not None:
                trace.append(s1)
        return g.forward_op("global_avg_pool", [s1])

    def __call__(self, g: Graph, x: Tensor, arch: ArchParams, mode: ForwardMode = EVAL) -> Tensor:
        return self.classifier(g, self.features(g, x, arch, mode))


def supernet_forward(g: Graph, batch: Tensor, net: Supernet, arch: ArchParams, mode: ForwardMode = EVAL) -> Tensor:
    return net(g, batch, arch, mode)
