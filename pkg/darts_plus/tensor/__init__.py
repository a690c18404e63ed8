from darts_plus.tensor.tensor import Graph, Node, Tensor
from darts_plus.tensor.optim import (
    OptimizerKind,
    OptimizerState,
    adam_state,
    adam_step,
    clip_grad_norm,
    cosine_lr,
    sgd_state,
    sgd_step,
    zero_grad,
)
from darts_plus.tensor.gradcheck import finite_diff_check

__all__ = [
    "Graph",
    "Node",
    "Tensor",
    "OptimizerKind",
    "OptimizerState",
    "adam_state",
    "adam_step",
    "clip_grad_norm",
    "cosine_lr",
    "sgd_state",
    "sgd_step",
    "zero_grad",
    "finite_diff_check",
]
