from typing import Optional

import numpy as np
from loguru import logger

from src.errors import ArgumentError, UnassignedNodeError
from src.models import ClusterAssignment, EmbeddingMatrix
from src.utils import derive_seed, timed_stage


DISTANCE_CHUNK_ELEMENTS = 2**24


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) matrix of squared Euclidean distances, built in row chunks."""
    n, d = points.shape
    k = centroids.shape[0]
    out = np.empty((n, k), dtype=np.result_type(points, centroids))
    rows = max(1, DISTANCE_CHUNK_ELEMENTS // max(1, k * d))
    for start in range(0, n, rows):
        diff = points[start : start + rows, None, :] - centroids[None, :, :]
        out[start : start + rows] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def kmeans_plusplus_init(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = squared_distances(points, points[chosen]).min(axis=1)

    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            index = int(rng.choice(n, p=closest / total))
        else:
            # every point already coincides with a centroid
            remaining = np.setdiff1d(np.arange(n), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        closest = np.minimum(closest, squared_distances(points, points[[index]])[:, 0])

    return points[chosen].copy()


def assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, float]:
    distances = squared_distances(points, centroids)
    # argmin breaks ties towards the lowest cluster id
    labels = np.argmin(distances, axis=1)
    inertia = float(distances[np.arange(points.shape[0]), labels].sum())
    return labels, inertia


def update_centroids(
    points: np.ndarray, labels: np.ndarray, centroids: np.ndarray, reseed: bool = True
) -> tuple[np.ndarray, int]:
    """Member means; an empty cluster is moved onto the point farthest from its centroid."""
    k = centroids.shape[0]
    updated = centroids.copy()
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)

    nonempty = counts > 0
    updated[nonempty] = sums[nonempty] / counts[nonempty, None]

    reseeded = 0
    if reseed and not nonempty.all():
        own = np.einsum("nd,nd->n", points - updated[labels], points - updated[labels])
        taken: set[int] = set()
        for cluster in np.flatnonzero(~nonempty):
            for index in np.argsort(-own, kind="stable"):
                if int(index) not in taken:
                    taken.add(int(index))
                    updated[cluster] = points[index]
                    own[index] = 0.0
                    reseeded += 1
                    break
    return updated, reseeded


def _lloyd(
    points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> ClusterAssignment:
    centroids = kmeans_plusplus_init(points, k, rng)
    labels, inertia = assign(points, centroids)
    trace = [inertia]
    reseeded = 0
    iterations = 0

    for iterations in range(1, max_iter + 1):
        centroids, moved = update_centroids(points, labels, centroids)
        reseeded += moved
        labels, current = assign(points, centroids)
        trace.append(current)

        previous, inertia = inertia, current
        if previous == 0 or (previous - current) / previous < tol:
            break

    # final centroids are exact member means of the final assignment
    centroids, _ = update_centroids(points, labels, centroids, reseed=False)
    _, inertia = _inertia_for(points, labels, centroids)
    trace.append(inertia)

    return ClusterAssignment(
        assignment=labels,
        centroids=centroids,
        inertia=inertia,
        inertia_trace=trace,
        iterations=iterations,
        reseeded=reseeded,
    )


def _inertia_for(
    points: np.ndarray, labels: np.ndarray, centroids: np.ndarray
) -> tuple[np.ndarray, float]:
    residual = points - centroids[labels]
    per_point = np.einsum("nd,nd->n", residual, residual)
    return per_point, float(per_point.sum())


@timed_stage
def kmeans(
    e_sem: EmbeddingMatrix | np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-4,
    n_init: int = 1,
    normalize: bool = False,
) -> ClusterAssignment:
    """
    Lloyd's algorithm from k-means++ seeds. Stops once the relative inertia
    improvement falls below `tol` or after `max_iter` iterations; with
    `n_init` > 1 the lowest-inertia restart wins.
    """
    points = e_sem.values if isinstance(e_sem, EmbeddingMatrix) else np.asarray(e_sem)
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ArgumentError(f"k must lie in [1, {n}], got {k}")
    if not np.all(np.isfinite(points)):
        raise ArgumentError("embeddings contain non-finite values")

    raw = points
    if normalize:
        norms = np.linalg.norm(points, axis=1, keepdims=True)
        points = np.divide(points, norms, out=np.zeros_like(points), where=norms > 0)

    best: Optional[ClusterAssignment] = None
    for restart in range(n_init):
        rng = np.random.default_rng(derive_seed(seed, restart))
        result = _lloyd(points, k, rng, max_iter, tol)
        if best is None or result.inertia < best.inertia:
            best = result

    if normalize:
        # latent concepts stay means of the unnormalized member rows
        centroids, _ = update_centroids(raw, best.assignment, best.centroids, reseed=False)
        best = best.model_copy(update={"centroids": centroids})

    if best.reseeded:
        logger.warning(f"Reseeded {best.reseeded} empty clusters")
    logger.info(
        f"k-means with k={k}: inertia {best.inertia:.6f} after {best.iterations} iterations"
    )
    return best


def latent_concept(assign: ClusterAssignment, node: int) -> np.ndarray:
    """Centroid of the node's cluster: the shared latent concept vector."""
    if not 0 <= node < assign.num_nodes:
        raise UnassignedNodeError(f"node {node} has no cluster assignment")
    return assign.centroids[assign.assignment[node]]


def cluster_members(assign: ClusterAssignment, cluster: int) -> np.ndarray:
    if not 0 <= cluster < assign.k:
        raise ArgumentError(f"cluster {cluster} outside [0, {assign.k})")
    return np.flatnonzero(assign.assignment == cluster)
