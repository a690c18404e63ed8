"""
Expectations over a standard normal variable.

Gauss-Hermite rules (probabilists' weight) are refined by doubling the node
count until two successive estimates agree to `tol`. Integrands with very
steep sigmoids converge slowly under Hermite rules, so a composite
Gauss-Legendre rule on [-12, 12] with panel doubling takes over when the
Hermite sequence stalls. Only when both fail is QuadratureError raised.
"""

from collections.abc import Callable
from functools import lru_cache

import numpy as np

from darts_plus.errors import QuadratureError
from darts_plus.logs import get_logger

logger = get_logger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

MIN_NODES = 64
# hermegauss weights overflow past a few hundred nodes
MAX_NODES = 256
TOLERANCE = 1e-10
LEGENDRE_ORDER = 16
LEGENDRE_HALF_WIDTH = 12.0
MIN_PANELS = 64
MAX_PANELS = 8192


@lru_cache(maxsize=None)
def hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with sum(w * f(x)) ~ E[f(eps)], eps ~ N(0, 1)."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    return nodes, weights / np.sqrt(2.0 * np.pi)


@lru_cache(maxsize=None)
def legendre_rule(panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule for E[f(eps)] restricted to |eps| <= LEGENDRE_HALF_WIDTH."""
    x, w = np.polynomial.legendre.leggauss(LEGENDRE_ORDER)
    edges = np.linspace(-LEGENDRE_HALF_WIDTH, LEGENDRE_HALF_WIDTH, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    density = np.exp(-0.5 * nodes * nodes) / np.sqrt(2.0 * np.pi)
    return nodes, weights * density


def _apply(f: Integrand, rule: tuple[np.ndarray, np.ndarray]) -> float:
    nodes, weights = rule
    return float(np.dot(weights, f(nodes)))


def _hermite(f: Integrand, tol: float) -> tuple[float | None, int, float]:
    n = MIN_NODES
    previous = _apply(f, hermite_rule(n))
    change = np.inf
    while n < MAX_NODES:
        n *= 2
        current = _apply(f, hermite_rule(n))
        change = abs(current - previous)
        logger.debug(f"hermite {n} nodes: change {change:.3e}")
        if change <= tol:
            return current, n, change
        previous = current
    return None, n, change


def _legendre(f: Integrand, tol: float) -> tuple[float | None, int, float]:
    panels = MIN_PANELS
    previous = _apply(f, legendre_rule(panels))
    change = np.inf
    while panels < MAX_PANELS:
        panels *= 2
        current = _apply(f, legendre_rule(panels))
        change = abs(current - previous)
        logger.debug(f"legendre {panels} panels: change {change:.3e}")
        if change <= tol:
            return current, panels * LEGENDRE_ORDER, change
        previous = current
    return None, panels * LEGENDRE_ORDER, change


def gaussian_expectation(f: Integrand, tol: float = TOLERANCE) -> float:
    """E[f(eps)] for eps ~ N(0, 1); f must accept and return arrays."""
    value, nodes, change = _hermite(f, tol)
    if value is not None:
        return value
    logger.debug(f"hermite rule stalled at {nodes} nodes (change {change:.3e}), switching to legendre panels")
    value, nodes, change = _legendre(f, tol)
    if value is None:
        raise QuadratureError(nodes, change)
    return value
