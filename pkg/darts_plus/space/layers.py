"""
Weight-holding building blocks shared by the supernet and the discrete
evaluation network.
"""

from dataclasses import dataclass

import numpy as np

from darts_plus.tensor import Graph, Tensor


@dataclass(frozen=True)
class ForwardMode:
    """How normalization layers behave during one forward pass."""

    training: bool
    update_stats: bool


# weight step: batch statistics, running statistics updated
WEIGHT_STEP = ForwardMode(training=True, update_stats=True)
# architecture step: batch statistics, running statistics frozen
ARCH_STEP = ForwardMode(training=True, update_stats=False)
EVAL = ForwardMode(training=False, update_stats=False)


class Module:
    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        for value in vars(self).values():
            params.extend(_collect(value))
        return params


def _collect(value) -> list[Tensor]:
    if isinstance(value, Tensor):
        return [value] if value.requires_grad else []
    if isinstance(value, Module):
        return value.parameters()
    if isinstance(value, (list, tuple)):
        found: list[Tensor] = []
        for item in value:
            found.extend(_collect(item))
        return found
    return []


class Conv(Module):
    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        dilation: int = 1,
    ):
        fan_in = c_in * kernel * kernel
        self.weight = Tensor.parameter(
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(c_out, c_in, kernel, kernel)), name="conv"
        )
        self.stride, self.padding, self.dilation = stride, padding, dilation

    def __call__(self, g: Graph, x: Tensor) -> Tensor:
        return g.forward_op(
            "conv2d", [x, self.weight], stride=self.stride, padding=self.padding, dilation=self.dilation
        )


class DepthwiseConv(Module):
    def __init__(
        self,
        channels: int,
        kernel: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        dilation: int = 1,
    ):
        fan_in = kernel * kernel
        self.weight = Tensor.parameter(
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(channels, 1, kernel, kernel)), name="dwconv"
        )
        self.stride, self.padding, self.dilation = stride, padding, dilation

    def __call__(self, g: Graph, x: Tensor) -> Tensor:
        return g.forward_op(
            "depthwise_conv2d",
            [x, self.weight],
            stride=self.stride,
            padding=self.padding,
            dilation=self.dilation,
        )


class BatchNorm2d(Module):
    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Tensor.parameter(np.ones(channels), name="bn.gamma")
        self.beta = Tensor.parameter(np.zeros(channels), name="bn.beta")
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        if not mode.training:
            return g.forward_op(
                "batch_norm",
                [x, self.gamma, self.beta],
                eps=self.eps,
                mean=self.running_mean.copy(),
                var=self.running_var.copy(),
            )
        if mode.update_stats:
            m = x.data.shape[0] * x.data.shape[2] * x.data.shape[3]
            mean = x.data.mean(axis=(0, 2, 3))
            var = x.data.var(axis=(0, 2, 3)) * (m / max(m - 1, 1))
            self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
        return g.forward_op("batch_norm", [x, self.gamma, self.beta], eps=self.eps)


class Linear(Module):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, bias: bool = True):
        bound = 1.0 / np.sqrt(c_in)
        self.weight = Tensor.parameter(rng.uniform(-bound, bound, size=(c_in, c_out)), name="linear")
        self.bias = Tensor.parameter(np.zeros(c_out), name="linear.bias") if bias else None

    def __call__(self, g: Graph, x: Tensor) -> Tensor:
        out = g.forward_op("matmul", [x, self.weight])
        if self.bias is not None:
            out = g.forward_op("bias_add", [out, self.bias])
        return out


class ReLUConvBN(Module):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, stride: int = 1):
        self.conv = Conv(c_in, c_out, 1, rng, stride=stride)
        self.bn = BatchNorm2d(c_out)

    def __call__(self, g: Graph, x: Tensor, mode: ForwardMode) -> Tensor:
        return self.bn(g, self.conv(g, g.forward_op("relu", [x])), mode)


def count_learnable_params(module: Module) -> int:
    """Number of trainable weight entries; architecture parameters are not part of any Module."""
    return sum(p.size for p in module.parameters())
