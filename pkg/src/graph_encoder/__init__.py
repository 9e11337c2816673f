from .gcn import (
    GcnEncoder,
    NormalizedAdjacency,
    adjacency_from_pairs,
    gcn_forward,
    normalize_adjacency,
    xavier_uniform,
)

__all__ = [
    "GcnEncoder",
    "NormalizedAdjacency",
    "adjacency_from_pairs",
    "gcn_forward",
    "normalize_adjacency",
    "xavier_uniform",
]
