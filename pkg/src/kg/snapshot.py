import json
from pathlib import Path
from typing import Any, Optional

from loguru import logger

from src.errors import FormatError
from src.models import KGTuple, Node, Relation, Split

from .graph import Graph

NODES_FILE = "nodes.txt"
SIDECAR_FILE = "graph.json"


def write_snapshot(
    graph: Graph, directory: str | Path, config: Optional[dict[str, Any]] = None
) -> dict[str, str]:
    """
    Write forward edges per split as TSV, the node list in id order, and a
    JSON sidecar with the relation table, vocabulary sizes and split counts.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}

    nodes_path = directory / NODES_FILE
    nodes_path.write_text(
        "".join(f"{node.text}\n" for node in graph.nodes), encoding="utf-8"
    )
    files["nodes"] = str(nodes_path)

    for split in Split:
        path = directory / f"{split}.tsv"
        with open(path, "w", encoding="utf-8") as f:
            for edge in graph.edges(split, include_inverse=False):
                f.write(
                    f"{graph.relation_name(edge.rel)}\t{graph.node_text(edge.head)}"
                    f"\t{graph.node_text(edge.tail)}\n"
                )
        files[str(split)] = str(path)

    sidecar = {
        "num_nodes": graph.num_nodes,
        "num_relations": graph.num_relations,
        "num_edges": len(graph),
        "augmented": graph.augmented,
        "split_counts": graph.split_counts(),
        "relations": [relation.model_dump() for relation in graph.relations],
        "config": config,
    }
    sidecar_path = directory / SIDECAR_FILE
    sidecar_path.write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    files["sidecar"] = str(sidecar_path)

    logger.info(f"Wrote graph snapshot to {directory}")
    return files


def load_snapshot(directory: str | Path) -> Graph:
    directory = Path(directory)
    sidecar = json.loads((directory / SIDECAR_FILE).read_text(encoding="utf-8"))

    texts = (directory / NODES_FILE).read_text(encoding="utf-8").splitlines()
    nodes = [Node(id=i, text=text) for i, text in enumerate(texts)]
    node_ids = {text: i for i, text in enumerate(texts)}

    relations = [Relation(**relation) for relation in sidecar["relations"]]
    forward_ids = {r.name: r.id for r in relations if not r.is_inverse}
    inverse_of = {r.base_id: r.id for r in relations if r.is_inverse}

    edges: dict[KGTuple, Split] = {}
    for split in Split:
        path = directory / f"{split}.tsv"
        if not path.exists():
            continue
        for line_number, line in enumerate(
            path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                relation, head, tail = line.split("\t")
                edge = KGTuple(node_ids[head], forward_ids[relation], node_ids[tail])
            except (ValueError, KeyError) as exc:
                raise FormatError(f"{path}:{line_number}: {exc}") from exc
            edges.setdefault(edge, split)

    if sidecar["augmented"]:
        for edge, split in list(edges.items()):
            edges.setdefault(KGTuple(edge.tail, inverse_of[edge.rel], edge.head), split)

    graph = Graph(nodes, relations, edges, augmented=sidecar["augmented"])
    if len(graph) != sidecar["num_edges"]:
        raise FormatError(
            f"snapshot at {directory} holds {len(graph)} edges, sidecar says {sidecar['num_edges']}"
        )
    return graph
