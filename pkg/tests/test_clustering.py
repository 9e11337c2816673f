import sys
from itertools import product

import numpy as np
import pytest

from src.clustering import (
    assign,
    cluster_members,
    kmeans,
    latent_concept,
    read_assignment,
    squared_distances,
    update_centroids,
    write_cluster_outputs,
)
from src.errors import ArgumentError, UnassignedNodeError
from src.models import ClusterAssignment, EmbeddingMatrix, EmbeddingRole, Node

FOUR_POINTS = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])


def _best_partition_inertia(points: np.ndarray, k: int) -> float:
    best = np.inf
    for labels in product(range(k), repeat=len(points)):
        labels = np.array(labels)
        if len(set(labels.tolist())) != k:
            continue
        inertia = 0.0
        for cluster in range(k):
            members = points[labels == cluster]
            inertia += float(((members - members.mean(axis=0)) ** 2).sum())
        best = min(best, inertia)
    return best


def test_four_point_example():
    result = kmeans(FOUR_POINTS, k=2, seed=0, n_init=3)

    assert result.assignment[0] == result.assignment[1]
    assert result.assignment[2] == result.assignment[3]
    assert result.assignment[0] != result.assignment[2]
    centroids = sorted(map(tuple, result.centroids))
    assert centroids == [(0.0, 0.5), (10.0, 0.5)]
    assert result.inertia == pytest.approx(1.0, abs=1e-12)
    assert _best_partition_inertia(FOUR_POINTS, 2) == pytest.approx(1.0)


def test_k_equals_n_gives_zero_inertia():
    points = np.random.default_rng(0).normal(size=(6, 3))
    result = kmeans(points, k=6, seed=1)
    assert result.inertia == pytest.approx(0.0, abs=1e-20)
    assert sorted(result.assignment.tolist()) == list(range(6))


@pytest.mark.parametrize("k", [0, 5])
def test_rejects_bad_k(k: int):
    with pytest.raises(ArgumentError):
        kmeans(FOUR_POINTS, k=k, seed=0)


def test_inertia_trace_never_increases():
    rng = np.random.default_rng(3)
    for instance in range(50):
        points = rng.normal(size=(int(rng.integers(10, 40)), 3))
        k = int(rng.integers(2, 6))
        result = kmeans(points, k=k, seed=instance, n_init=1, tol=0.0)

        trace = np.array(result.inertia_trace)
        assert np.all(np.diff(trace) <= 1e-9)


def test_centroids_are_member_means():
    points = np.random.default_rng(4).normal(size=(30, 4))
    result = kmeans(points, k=4, seed=2)
    for cluster in range(result.k):
        members = points[cluster_members(result, cluster)]
        assert np.allclose(result.centroids[cluster], members.mean(axis=0), atol=1e-8)


def test_normalized_clustering_keeps_raw_means():
    points = np.random.default_rng(8).normal(size=(20, 3)) * 5
    result = kmeans(points, k=3, seed=0, normalize=True)
    for cluster in range(result.k):
        members = points[cluster_members(result, cluster)]
        assert np.allclose(result.centroids[cluster], members.mean(axis=0), atol=1e-8)


def test_close_to_brute_force_optimum():
    rng = np.random.default_rng(5)
    ratios = []
    for seed in range(10):
        points = rng.normal(size=(int(rng.integers(5, 9)), 2))
        k = int(rng.integers(2, 4))
        found = kmeans(points, k=k, seed=seed, n_init=3).inertia
        ratios.append(found / max(_best_partition_inertia(points, k), 1e-12))
    assert np.mean(ratios) <= 1.05


def test_identical_embeddings_share_a_cluster():
    points = np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0], [9.0, 0.0], [1.0, 2.0]])
    result = kmeans(points, k=3, seed=6)
    assert len({result.assignment[i] for i in (0, 1, 4)}) == 1


def test_deterministic_per_seed():
    points = np.random.default_rng(7).normal(size=(25, 3))
    first = kmeans(points, k=4, seed=9)
    second = kmeans(points, k=4, seed=9)
    assert np.array_equal(first.assignment, second.assignment)
    assert np.array_equal(first.centroids, second.centroids)


def test_accepts_embedding_matrix():
    matrix = EmbeddingMatrix(values=FOUR_POINTS, role=EmbeddingRole.semantic)
    assert kmeans(matrix, k=2, seed=0, n_init=3).inertia == pytest.approx(1.0)


def test_empty_cluster_is_reseeded_to_farthest_point():
    points = np.array([[0.0], [1.0], [10.0]])
    centroids = np.array([[0.5], [100.0]])
    labels, _ = assign(points, centroids)
    assert labels.tolist() == [0, 0, 0]

    updated, reseeded = update_centroids(points, labels, centroids)
    assert reseeded == 1
    assert updated[1, 0] == 10.0


def test_assignment_ties_go_to_lowest_cluster():
    labels, _ = assign(np.array([[0.0]]), np.array([[1.0], [-1.0]]))
    assert labels.tolist() == [0]


def test_latent_concept_is_shared_cluster_mean():
    points = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0], [50.0, 50.0]])
    result = ClusterAssignment(
        assignment=np.array([0, 0, 0, 1]),
        centroids=np.array([[1.0, 1.0], [50.0, 50.0]]),
        inertia=0.0,
    )
    assert np.array_equal(latent_concept(result, 0), latent_concept(result, 2))
    assert np.array_equal(latent_concept(result, 0), points[:3].mean(axis=0))
    assert np.array_equal(latent_concept(result, 3), points[3])

    with pytest.raises(UnassignedNodeError):
        latent_concept(result, 4)


def test_cluster_outputs_reload(tmp_path):
    nodes = [Node(id=i, text=f"node {i}") for i in range(4)]
    result = kmeans(FOUR_POINTS, k=2, seed=0, n_init=3)
    files = write_cluster_outputs(result, nodes, tmp_path)

    reloaded = read_assignment(tmp_path, nodes)
    assert np.array_equal(reloaded.assignment, result.assignment)
    assert np.array_equal(reloaded.centroids, result.centroids)
    assert reloaded.inertia == result.inertia
    assert "size_histogram" in open(files["metrics"], encoding="utf-8").read()
    assert result.size_histogram() == {2: 2}


def test_chunked_distances_match_the_full_broadcast(monkeypatch):
    rng = np.random.default_rng(3)
    points, centroids = rng.normal(size=(23, 5)), rng.normal(size=(4, 5))
    full = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    reference = kmeans(points, k=4, seed=2)

    monkeypatch.setattr(sys.modules["src.clustering.kmeans"], "DISTANCE_CHUNK_ELEMENTS", 7)
    assert squared_distances(points, centroids).shape == (23, 4)
    assert np.allclose(squared_distances(points, centroids), full, rtol=0, atol=1e-12)

    chunked = kmeans(points, k=4, seed=2)
    assert np.array_equal(chunked.assignment, reference.assignment)
    assert np.array_equal(chunked.centroids, reference.centroids)
