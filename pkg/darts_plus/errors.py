"""
Error types raised across darts_plus.

Every error carries the structured fields a caller needs to react to it
(op name, offending shapes, key path, step index) as attributes, and a
readable message for the logs.
"""

from collections.abc import Sequence


class DartsPlusError(Exception):
    pass


class UnImplementedError(DartsPlusError):
    def __init__(self, method: str, class_name: str):
        self.method = method
        self.class_name = class_name
        super().__init__(f"{method} is not implemented by {class_name}")


class ShapeError(DartsPlusError):
    def __init__(self, op: str, shapes: Sequence[tuple[int, ...]], detail: str = ""):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        message = f"shape mismatch in {op}: {self.shapes}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class NonFiniteError(DartsPlusError):
    def __init__(self, where: str, step: int | None = None):
        self.where = where
        self.step = step
        message = f"non-finite value in {where}"
        if step is not None:
            message = f"{message} at step {step}"
        super().__init__(message)


class ConfigError(DartsPlusError):
    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")


class DatasetError(DartsPlusError):
    pass


class GenotypeError(DartsPlusError):
    pass


class QuadratureError(DartsPlusError):
    def __init__(self, nodes: int, change: float):
        self.nodes = nodes
        self.change = change
        super().__init__(
            f"quadrature did not converge: change {change:.3e} at {nodes} nodes"
        )


class RootFindingError(DartsPlusError):
    pass
