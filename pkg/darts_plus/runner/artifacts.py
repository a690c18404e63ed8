"""
Writers for run artifacts: CSV metrics, JSON documents and DOT cell diagrams.
"""

import csv
import json
from collections.abc import Iterable, Sequence
from pathlib import Path

from darts_plus.errors import GenotypeError
from darts_plus.runner import config as cfg
from darts_plus.space import CellKind
from darts_plus.stopping import Genotype


def format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.{cfg.CSV_FLOAT_DIGITS}g}"
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} values for {len(columns)} columns")
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write_json(path: Path, document) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_jsonl(path: Path, documents: Iterable[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        for document in documents:
            f.write(json.dumps(document, sort_keys=True))
            f.write("\n")
    return path


def read_genotype(path: Path) -> Genotype:
    try:
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise GenotypeError(f"cannot read genotype {path}: {exc}") from exc
    return Genotype.from_json_dict(document)


def _node_label(node: int, last: int) -> str:
    if node == 0:
        return "c_{k-2}"
    if node == 1:
        return "c_{k-1}"
    if node == last:
        return "c_{k}"
    return str(node - 2)


def export_dot(genotype: Genotype) -> str:
    """One cluster per cell kind; nodes in index order, edges in triple order."""
    out_node = genotype.num_nodes - 1
    lines = ["digraph genotype {", "  rankdir=LR;"]
    for kind in CellKind:
        name = kind.value
        lines.append(f"  subgraph cluster_{name} {{")
        lines.append(f'    label="{name}";')
        for node in range(genotype.num_nodes):
            lines.append(f'    {name}_{node} [label="{_node_label(node, out_node)}"];')
        for node, source, op in genotype.cell(kind):
            lines.append(f'    {name}_{source} -> {name}_{node} [label="{op.value}"];')
        for node in range(2, out_node):
            lines.append(f"    {name}_{node} -> {name}_{out_node};")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
