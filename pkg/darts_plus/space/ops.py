"""
Candidate operations of a mixed edge.

The canonical order of OpKind is the declaration order below; discretization
breaks ties by it.
"""

from enum import Enum

import numpy as np

from darts_plus.space.layers import BatchNorm2d, Conv, DepthwiseConv, ForwardMode, Module, ReLUConvBN
from darts_plus.tensor import Graph, Tensor


class OpKind(str, Enum):
    ZERO = "none"
    SKIP_CONNECT = "skip_connect"
    MAX_POOL_3X3 = "max_pool_3x3"
    AVG_POOL_3X3 = "avg_pool_3x3"
    SEP_CONV_3X3 = "sep_conv_3x3"
    SEP_CONV_5X5 = "sep_conv_5x5"
    DIL_CONV_3X3 = "dil_conv_3x3"
    DIL_CONV_5X5 = "dil_conv_5x5"

    @property
    def order(self) -> int:
        return CANONICAL_ORDER.index(self)

    @property
    def learnable(self) -> bool:
        return self in LEARNABLE_OPS


CANONICAL_ORDER: tuple[OpKind, ...] = tuple(OpKind)
LEARNABLE_OPS: frozenset[OpKind] = frozenset(
    {OpKind.SEP_CONV_3X3, OpKind.SEP_CONV_5X5, OpKind.DIL_CONV_3X3, OpKind.DIL_CONV_5X5}
)


def reduced_size(size: int, stride: int) -> int:
    return (size - 1) // stride + 1


class Zero(Module):
    def __init__(self, stride: int):
        self.stride = stride

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        n, c, h, w = x.shape
        return Tensor(np.zeros((n, c, reduced_size(h, self.stride), reduced_size(w, self.stride))))


class Identity(Module):
    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        return x


class StridedSkip(Module):
    """Skip connection on a stride-2 edge: a single strided 1x1 projection."""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.proj = ReLUConvBN(channels, channels, rng, stride=2)

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        return self.proj(g, x, mode)


class Pool(Module):
    def __init__(self, op: str, stride: int):
        self.op = op
        self.stride = stride

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        return g.forward_op(self.op, [x], kernel=3, stride=self.stride, padding=1)


class DilConv(Module):
    def __init__(self, channels: int, kernel: int, stride: int, rng: np.random.Generator, dilation: int = 2):
        padding = dilation * (kernel - 1) // 2
        self.depthwise = DepthwiseConv(channels, kernel, rng, stride=stride, padding=padding, dilation=dilation)
        self.pointwise = Conv(channels, channels, 1, rng)
        self.bn = BatchNorm2d(channels)

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        x = g.forward_op("relu", [x])
        return self.bn(g, self.pointwise(g, self.depthwise(g, x)), mode)


class SepConv(Module):
    """Two stacked ReLU -> depthwise -> pointwise -> norm blocks; only the first is strided."""

    def __init__(self, channels: int, kernel: int, stride: int, rng: np.random.Generator):
        self.first = DilConv(channels, kernel, stride, rng, dilation=1)
        self.second = DilConv(channels, kernel, 1, rng, dilation=1)

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        return self.second(g, self.first(g, x, mode), mode)


def build_op(kind: OpKind, channels: int, stride: int, rng: np.random.Generator) -> Module:
    if kind is OpKind.ZERO:
        return Zero(stride)
    if kind is OpKind.SKIP_CONNECT:
        return Identity() if stride == 1 else StridedSkip(channels, rng)
    if kind is OpKind.MAX_POOL_3X3:
        return Pool("max_pool2d", stride)
    if kind is OpKind.AVG_POOL_3X3:
        return Pool("avg_pool2d", stride)
    if kind is OpKind.SEP_CONV_3X3:
        return SepConv(channels, 3, stride, rng)
    if kind is OpKind.SEP_CONV_5X5:
        return SepConv(channels, 5, stride, rng)
    if kind is OpKind.DIL_CONV_3X3:
        return DilConv(channels, 3, stride, rng)
    return DilConv(channels, 5, stride, rng)
