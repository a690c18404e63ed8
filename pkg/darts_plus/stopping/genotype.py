"""
Discrete architectures derived from architecture parameters.

Per edge the strongest non-zero operation is chosen; per intermediate node
the two incoming edges whose chosen operation has the largest softmax weight
are kept. Ties go to the lower canonical operation index, then to the lower
source node.
"""

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from darts_plus.errors import GenotypeError
from darts_plus.space import ArchParams, CellKind, CellSpec, OpKind

Triple = tuple[int, int, OpKind]


@dataclass(frozen=True)
class Genotype:
    normal: tuple[Triple, ...]
    reduce: tuple[Triple, ...]

    def cell(self, kind: CellKind) -> tuple[Triple, ...]:
        return self.normal if kind is CellKind.NORMAL else self.reduce

    @property
    def num_intermediate(self) -> int:
        return len(self.normal) // 2

    @property
    def num_nodes(self) -> int:
        return self.num_intermediate + 3

    def validate(self) -> "Genotype":
        counts = {len(self.normal), len(self.reduce)}
        if len(counts) != 1 or not self.normal or len(self.normal) % 2:
            raise GenotypeError("both cells need the same, even, non-zero number of triples")
        expected_nodes = range(2, 2 + self.num_intermediate)
        for kind in CellKind:
            by_node: dict[int, list[int]] = {}
            for node, source, op in self.cell(kind):
                if op is OpKind.ZERO:
                    raise GenotypeError(f"{kind.value} cell selects the zero operation at node {node}")
                if not 0 <= source < node:
                    raise GenotypeError(f"{kind.value} cell edge {source}->{node} is not forward")
                by_node.setdefault(node, []).append(source)
            if sorted(by_node) != list(expected_nodes):
                raise GenotypeError(f"{kind.value} cell nodes {sorted(by_node)} are not {list(expected_nodes)}")
            for node, sources in by_node.items():
                if len(sources) != 2 or len(set(sources)) != 2:
                    raise GenotypeError(f"{kind.value} cell node {node} needs two distinct inputs, has {sources}")
        return self

    def to_json_dict(self) -> dict[str, list[list]]:
        return {kind.value: [[node, source, op.value] for node, source, op in self.cell(kind)] for kind in CellKind}

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Iterable]) -> "Genotype":
        try:
            cells = {
                kind: tuple(sorted((int(n), int(s), OpKind(op)) for n, s, op in data[kind.value]))
                for kind in CellKind
            }
        except (KeyError, ValueError, TypeError) as exc:
            raise GenotypeError(f"malformed genotype: {exc}") from exc
        return cls(cells[CellKind.NORMAL], cells[CellKind.REDUCE]).validate()


def _discretize_cell(probs: np.ndarray, candidates: tuple[OpKind, ...], spec: CellSpec) -> tuple[Triple, ...]:
    columns = [k for k, op in enumerate(candidates) if op is not OpKind.ZERO]
    if not columns:
        raise GenotypeError("no non-zero candidate operation to select")
    # candidate columns are in canonical order, so argmax keeps the lowest op index on ties
    triples: list[Triple] = []
    for node in spec.intermediate_nodes:
        scored = []
        for e in spec.incoming(node):
            row = probs[e, columns]
            best = int(np.argmax(row))
            op = candidates[columns[best]]
            scored.append((-row[best], op.order, spec.edges[e][0], op))
        scored.sort(key=lambda item: item[:3])
        triples.extend(sorted((node, source, op) for _, _, source, op in scored[:2]))
    return tuple(triples)


def discretize(arch: ArchParams) -> Genotype:
    if not all(np.all(np.isfinite(t.data)) for t in arch.parameters()):
        raise GenotypeError("architecture parameters are not finite")
    cells = {
        kind: _discretize_cell(arch.probabilities(kind), arch.candidates, arch.spec(kind)) for kind in CellKind
    }
    return Genotype(cells[CellKind.NORMAL], cells[CellKind.REDUCE])


def retained_edges(genotype: Genotype, kind: CellKind) -> set[int]:
    spec = CellSpec(genotype.num_nodes, kind)
    return {spec.edge_index(source, node) for node, source, _ in genotype.cell(kind)}
