"""
SGD-with-momentum and Adam over lists of parameter tensors.

Optimizer state lives in an OptimizerState value that is passed to the step
functions; buffers are created lazily on the first step with the shapes of
the parameters they track.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from darts_plus.errors import ConfigError, ShapeError
from darts_plus.tensor.tensor import Tensor


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass
class OptimizerState:
    kind: OptimizerKind
    lr: float
    weight_decay: float = 0.0
    momentum: float = 0.9
    betas: tuple[float, float] = (0.5, 0.999)
    eps: float = 1e-8
    step_count: int = 0
    buffers: dict[str, list[np.ndarray]] = field(default_factory=dict)


def sgd_state(lr: float = 0.025, momentum: float = 0.9, weight_decay: float = 3e-4) -> OptimizerState:
    return OptimizerState(OptimizerKind.SGD, lr=lr, momentum=momentum, weight_decay=weight_decay)


def adam_state(
    lr: float = 3e-4,
    betas: tuple[float, float] = (0.5, 0.999),
    weight_decay: float = 1e-3,
    eps: float = 1e-8,
) -> OptimizerState:
    return OptimizerState(OptimizerKind.ADAM, lr=lr, betas=tuple(betas), weight_decay=weight_decay, eps=eps)


def _buffers(state: OptimizerState, name: str, params: Sequence[Tensor], op: str) -> list[np.ndarray]:
    buffers = state.buffers.get(name)
    if buffers is None:
        buffers = [np.zeros_like(p.data) for p in params]
        state.buffers[name] = buffers
    if len(buffers) != len(params):
        raise ShapeError(op, [(len(buffers),), (len(params),)], "parameter count changed")
    for buf, p in zip(buffers, params):
        if buf.shape != p.shape:
            raise ShapeError(op, [buf.shape, p.shape], "buffer does not match parameter")
    return buffers


def sgd_step(state: OptimizerState, params: Sequence[Tensor]) -> None:
    if state.kind is not OptimizerKind.SGD:
        raise ConfigError("optimizer.kind", f"sgd_step called with {state.kind.value} state")
    velocity = _buffers(state, "momentum", params, "sgd_step")
    for p, v in zip(params, velocity):
        v *= state.momentum
        v += p.grad + state.weight_decay * p.data
        p.data -= state.lr * v
    state.step_count += 1


def adam_step(state: OptimizerState, params: Sequence[Tensor]) -> None:
    if state.kind is not OptimizerKind.ADAM:
        raise ConfigError("optimizer.kind", f"adam_step called with {state.kind.value} state")
    first = _buffers(state, "first_moment", params, "adam_step")
    second = _buffers(state, "second_moment", params, "adam_step")
    beta1, beta2 = state.betas
    state.step_count += 1
    t = state.step_count
    for p, m, v in zip(params, first, second):
        g = p.grad + state.weight_decay * p.data
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def zero_grad(params: Sequence[Tensor]) -> None:
    for p in params:
        p.zero_grad()


def clip_grad_norm(params: Sequence[Tensor], max_norm: float) -> float:
    """Rescale gradients in place so their global L2 norm is at most max_norm."""
    total = math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params))
    if total > max_norm > 0.0:
        factor = max_norm / (total + 1e-6)
        for p in params:
            p.grad *= factor
    return total


def cosine_lr(epoch: int, max_epochs: int, lr: float, lr_min: float = 0.0) -> float:
    """Learning rate after `epoch` of `max_epochs` epochs on a cosine schedule."""
    epoch = min(max(epoch, 0), max_epochs)
    return lr_min + 0.5 * (lr - lr_min) * (1.0 + math.cos(math.pi * epoch / max_epochs))
