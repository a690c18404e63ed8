"""
Central finite-difference verification of autodiff gradients.
"""

from collections.abc import Callable, Sequence

import numpy as np

from darts_plus.errors import NonFiniteError
from darts_plus.logs import get_logger
from darts_plus.tensor.optim import zero_grad
from darts_plus.tensor.tensor import Graph, Tensor

logger = get_logger(__name__)

LossFn = Callable[[Graph], Tensor]


def _evaluate(f: LossFn) -> float:
    value = f(Graph()).item()
    if not np.isfinite(value):
        raise NonFiniteError("finite-difference evaluation")
    return value


def analytic_gradients(f: LossFn, params: Sequence[Tensor]) -> list[np.ndarray]:
    zero_grad(params)
    graph = Graph()
    loss = f(graph)
    graph.backward(loss)
    return [p.grad.copy() for p in params]


def finite_diff_check(
    f: LossFn,
    params: Sequence[Tensor],
    h: float = 1e-5,
    floor: float = 1e-12,
    max_checks: int | None = None,
    seed: int = 0,
) -> float:
    """
    Max relative error between autodiff and central differences.

    `f` builds the loss on the graph it is given and must be deterministic.
    The error of one coordinate is |a - c| / (|a| + |c| + floor). With
    `max_checks` only that many coordinates per parameter are probed, chosen
    by a seeded generator.
    """
    analytic = analytic_gradients(f, params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        if max_checks is not None and max_checks < p.size:
            indices = np.sort(rng.choice(p.size, size=max_checks, replace=False))
        else:
            indices = np.arange(p.size)
        for i in indices:
            original = p.data.flat[i]
            p.data.flat[i] = original + h
            f_plus = _evaluate(f)
            p.data.flat[i] = original - h
            f_minus = _evaluate(f)
            p.data.flat[i] = original
            central = (f_plus - f_minus) / (2.0 * h)
            a = grad.flat[i]
            err = abs(a - central) / (abs(a) + abs(central) + floor)
            worst = max(worst, err)
    logger.debug(f"finite-difference check over {len(params)} tensors: max rel err {worst:.3e}")
    return worst
