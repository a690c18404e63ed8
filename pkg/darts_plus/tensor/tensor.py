"""
Tensors and the computation graph of the reverse-mode engine.

A Graph records one node per forward op in append order, so node ids are a
topological order by construction. Parameters and data are leaves: they are
never produced by the graph that consumes them, which lets the same parameter
tensor be reused by a fresh Graph on every training step.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from darts_plus.errors import NonFiniteError, ShapeError
from darts_plus.tensor.functions import Function, make_function


class Tensor:
    def __init__(self, data: Any, requires_grad: bool = False, name: str = ""):
        self.data = np.array(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self.requires_grad = requires_grad
        self.name = name
        self.node_id: int | None = None
        self.graph: "Graph | None" = None

    @classmethod
    def parameter(cls, data: Any, name: str = "") -> "Tensor":
        return cls(data, requires_grad=True, name=name)

    @classmethod
    def _wrap(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        # op outputs are fresh arrays; skip the defensive copy
        out = cls.__new__(cls)
        out.data = data
        out.grad = np.zeros_like(data)
        out.requires_grad = requires_grad
        out.name = ""
        out.node_id = None
        out.graph = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", [self.shape], "tensor is not a scalar")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"


@dataclass
class Node:
    node_id: int
    op: Function
    inputs: tuple[Tensor, ...]
    output: Tensor


class Graph:
    def __init__(self):
        self.nodes: list[Node] = []
        self._leaves: dict[int, Tensor] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def forward_op(self, op: str, inputs: Sequence[Tensor], **attrs: Any) -> Tensor:
        function = make_function(op, **attrs)
        arrays = [t.data for t in inputs]
        function.check(*arrays)
        out = function.forward(*arrays)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(f"forward of {op}")

        for t in inputs:
            if t.graph is not self:
                self._leaves.setdefault(id(t), t)

        output = Tensor._wrap(out, any(t.requires_grad for t in inputs))
        output.node_id = len(self.nodes)
        output.graph = self
        self.nodes.append(Node(output.node_id, function, tuple(inputs), output))
        return output

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ShapeError("backward", [loss.shape], "loss must be a scalar")

        for leaf in self._leaves.values():
            leaf.grad.fill(0.0)
        for node in self.nodes:
            node.output.grad.fill(0.0)
        loss.grad.fill(1.0)
        if loss.graph is not self:
            return

        for node in reversed(self.nodes[: loss.node_id + 1]):
            out = node.output
            if not out.requires_grad or not out.grad.any():
                continue
            grads = node.op.backward(out.grad, *(t.data for t in node.inputs))
            for t, g in zip(node.inputs, grads):
                if g is None or not t.requires_grad:
                    continue
                t.grad += g

        for leaf in self._leaves.values():
            if leaf.requires_grad and not np.all(np.isfinite(leaf.grad)):
                raise NonFiniteError(f"gradient of {leaf.name or 'leaf'}")
