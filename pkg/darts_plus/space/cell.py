"""
Cells: small DAGs of mixed edges.

Node 0 and 1 are the outputs of the two preceding cells, nodes 2 .. N-2 are
intermediate nodes, node N-1 is the channel concatenation of the intermediate
nodes. Edge e of a cell is the e-th pair in `CellSpec.edges`, ordered by
target node and then source node; the architecture table rows follow it.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from darts_plus.errors import ShapeError
from darts_plus.space.layers import ForwardMode, Module, ReLUConvBN
from darts_plus.space.ops import OpKind, build_op
from darts_plus.tensor import Graph, Tensor


class CellKind(str, Enum):
    NORMAL = "normal"
    REDUCE = "reduce"


@dataclass(frozen=True)
class CellSpec:
    num_nodes: int = 7
    kind: CellKind = CellKind.NORMAL

    def __post_init__(self):
        if self.num_nodes < 4:
            raise ValueError(f"a cell needs at least 4 nodes, got {self.num_nodes}")

    @property
    def intermediate_nodes(self) -> range:
        return range(2, self.num_nodes - 1)

    @property
    def num_intermediate(self) -> int:
        return self.num_nodes - 3

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, j) for j in self.intermediate_nodes for i in range(j))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_index(self, source: int, target: int) -> int:
        return self.edges.index((source, target))

    def incoming(self, target: int) -> list[int]:
        """Edge indices ending at `target`, by increasing source."""
        return [e for e, (_, j) in enumerate(self.edges) if j == target]

    def stride(self, source: int) -> int:
        return 2 if self.kind is CellKind.REDUCE and source < 2 else 1


class MixedEdge(Module):
    def __init__(self, channels: int, stride: int, candidates: Sequence[OpKind], rng: np.random.Generator):
        self.candidates = tuple(candidates)
        self.ops = [build_op(kind, channels, stride, rng) for kind in self.candidates]

    def __call__(self, g: Graph, x: Tensor, weights: Tensor, mode: ForwardMode) -> Tensor:
        outputs = []
        for kind, op in zip(self.candidates, self.ops):
            try:
                out = op(g, x, mode)
            except ShapeError as exc:
                raise ShapeError(kind.value, exc.shapes, str(exc)) from exc
            if outputs and out.shape != outputs[0].shape:
                raise ShapeError(kind.value, [outputs[0].shape, out.shape], "candidate output shape differs")
            outputs.append(out)
        return g.forward_op("mix", [weights, *outputs])


def mixed_edge_forward(g: Graph, x: Tensor, edge: MixedEdge, weights: Tensor, mode: ForwardMode) -> Tensor:
    """sum_o p_o * o(x) for one edge, `weights` being that edge's softmaxed row."""
    return edge(g, x, weights, mode)


class Cell(Module):
    def __init__(
        self,
        spec: CellSpec,
        c_prev_prev: int,
        c_prev: int,
        channels: int,
        reduction_prev: bool,
        candidates: Sequence[OpKind],
        rng: np.random.Generator,
        preprocess: bool = True,
    ):
        self.spec = spec
        self.channels = channels
        if preprocess:
            self.preprocess0 = ReLUConvBN(c_prev_prev, channels, rng, stride=2 if reduction_prev else 1)
            self.preprocess1 = ReLUConvBN(c_prev, channels, rng)
        else:
            self.preprocess0 = None
            self.preprocess1 = None
        self.edges = [MixedEdge(channels, spec.stride(i), candidates, rng) for i, _ in spec.edges]

    @property
    def kind(self) -> CellKind:
        return self.spec.kind

    def __call__(self, g: Graph, s0: Tensor, s1: Tensor, weights: Tensor, mode: ForwardMode) -> Tensor:
        """`weights` is the softmaxed [num_edges, num_candidates] table of this cell's kind."""
        if self.preprocess0 is not None:
            s0 = self.preprocess0(g, s0, mode)
            s1 = self.preprocess1(g, s1, mode)
        states = [s0, s1]
        for j in self.spec.intermediate_nodes:
            node = None
            for e in self.spec.incoming(j):
                source = self.spec.edges[e][0]
                row = g.forward_op("row", [weights], index=e)
                out = mixed_edge_forward(g, states[source], self.edges[e], row, mode)
                node = out if node is None else g.forward_op("add", [node, out])
            states.append(node)
        return g.forward_op("concat", states[2:], axis=1)


def cell_forward(
    g: Graph, inputs: tuple[Tensor, Tensor], cell: Cell, table: Tensor, mode: ForwardMode
) -> Tensor:
    weights = g.forward_op("softmax", [table], axis=1)
    return cell(g, inputs[0], inputs[1], weights, mode)
