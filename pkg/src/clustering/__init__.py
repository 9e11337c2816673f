from .io import read_assignment, write_cluster_outputs
from .kmeans import (
    assign,
    cluster_members,
    kmeans,
    kmeans_plusplus_init,
    latent_concept,
    squared_distances,
    update_centroids,
)

__all__ = [
    "read_assignment",
    "write_cluster_outputs",
    "assign",
    "cluster_members",
    "kmeans",
    "kmeans_plusplus_init",
    "latent_concept",
    "squared_distances",
    "update_centroids",
]
