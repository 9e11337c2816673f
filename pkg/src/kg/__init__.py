from .graph import (
    GOLD_SPLITS,
    STRUCTURE_SPLITS,
    Graph,
    augment_inverse,
    build_graph,
    inverse_name,
)
from .parse import parse_file, parse_tuples, serialize_tuples
from .perturb import SIM_RELATION, densify_by_similarity, sparsify, split_train_edges
from .snapshot import load_snapshot, write_snapshot
from .vocab import Vocabulary

__all__ = [
    "GOLD_SPLITS",
    "STRUCTURE_SPLITS",
    "Graph",
    "augment_inverse",
    "build_graph",
    "inverse_name",
    "parse_file",
    "parse_tuples",
    "serialize_tuples",
    "SIM_RELATION",
    "densify_by_similarity",
    "sparsify",
    "split_train_edges",
    "load_snapshot",
    "write_snapshot",
    "Vocabulary",
]
