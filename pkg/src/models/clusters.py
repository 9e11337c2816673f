import numpy as np
from pydantic import BaseModel, ConfigDict


class ClusterAssignment(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    assignment: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_trace: list[float] = []
    iterations: int = 0
    reseeded: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.assignment.shape[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def size_histogram(self) -> dict[int, int]:
        """Maps a cluster size to how many clusters have that size."""
        sizes, counts = np.unique(self.sizes(), return_counts=True)
        return {int(size): int(count) for size, count in zip(sizes, counts)}

    def latent_matrix(self) -> np.ndarray:
        return self.centroids[self.assignment]
