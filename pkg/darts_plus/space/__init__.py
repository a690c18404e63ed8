from darts_plus.space.cell import Cell, CellKind, CellSpec, MixedEdge, cell_forward, mixed_edge_forward
from darts_plus.space.config import SpaceConfig
from darts_plus.space.layers import (
    ARCH_STEP,
    EVAL,
    WEIGHT_STEP,
    BatchNorm2d,
    Conv,
    ForwardMode,
    Linear,
    Module,
    ReLUConvBN,
    count_learnable_params,
)
from darts_plus.space.ops import CANONICAL_ORDER, LEARNABLE_OPS, OpKind, build_op
from darts_plus.space.supernet import ArchParams, Supernet, reduction_layers, supernet_forward

__all__ = [
    "Cell",
    "CellKind",
    "CellSpec",
    "MixedEdge",
    "cell_forward",
    "mixed_edge_forward",
    "SpaceConfig",
    "ARCH_STEP",
    "EVAL",
    "WEIGHT_STEP",
    "BatchNorm2d",
    "Conv",
    "ForwardMode",
    "Linear",
    "Module",
    "ReLUConvBN",
    "count_learnable_params",
    "CANONICAL_ORDER",
    "LEARNABLE_OPS",
    "OpKind",
    "build_op",
    "ArchParams",
    "Supernet",
    "reduction_layers",
    "supernet_forward",
]
