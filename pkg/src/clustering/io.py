import json
from pathlib import Path
from typing import Sequence

import numpy as np
from loguru import logger

from src.encoders import read_embedding_file, write_embeddings
from src.errors import FormatError
from src.models import ClusterAssignment, Node

ASSIGNMENT_FILE = "clusters.tsv"
CENTROID_FILE = "centroids.txt"
METRICS_FILE = "cluster_metrics.json"


def write_cluster_outputs(
    assign: ClusterAssignment, nodes: Sequence[Node], directory: str | Path
) -> dict[str, str]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    assignment_path = directory / ASSIGNMENT_FILE
    with open(assignment_path, "w", encoding="utf-8") as f:
        for node in nodes:
            f.write(f"{node.text}\t{int(assign.assignment[node.id])}\n")

    centroid_path = directory / CENTROID_FILE
    write_embeddings(assign.centroids, [str(i) for i in range(assign.k)], centroid_path)

    metrics_path = directory / METRICS_FILE
    metrics = {
        "k": assign.k,
        "inertia": assign.inertia,
        "inertia_trace": assign.inertia_trace,
        "iterations": assign.iterations,
        "reseeded": assign.reseeded,
        "size_histogram": {str(k): v for k, v in assign.size_histogram().items()},
    }
    metrics_path.write_text(json.dumps(metrics, indent=2), encoding="utf-8")

    logger.info(f"Wrote {assign.k} clusters to {directory}")
    return {
        "assignment": str(assignment_path),
        "centroids": str(centroid_path),
        "metrics": str(metrics_path),
    }


def read_assignment(
    directory: str | Path, nodes: Sequence[Node]
) -> ClusterAssignment:
    directory = Path(directory)
    by_text: dict[str, int] = {}
    with open(directory / ASSIGNMENT_FILE, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            text, sep, cluster = line.rpartition("\t")
            if not sep or not cluster.isdigit():
                raise FormatError(f"{ASSIGNMENT_FILE}:{line_number}: malformed row")
            by_text[text] = int(cluster)

    vectors, _ = read_embedding_file(directory / CENTROID_FILE, case_fold=False)
    centroids = np.stack([vectors[str(i)] for i in range(len(vectors))])

    missing = [node.text for node in nodes if node.text not in by_text]
    if missing:
        raise FormatError(f"{len(missing)} nodes lack a cluster, e.g. {missing[0]!r}")
    assignment = np.array([by_text[node.text] for node in nodes], dtype=np.int64)
    if assignment.size and assignment.max() >= centroids.shape[0]:
        raise FormatError("cluster id outside the centroid table")

    metrics_path = directory / METRICS_FILE
    metrics = (
        json.loads(metrics_path.read_text(encoding="utf-8"))
        if metrics_path.exists()
        else {}
    )
    return ClusterAssignment(
        assignment=assignment,
        centroids=centroids,
        inertia=float(metrics.get("inertia", 0.0)),
        inertia_trace=metrics.get("inertia_trace", []),
        iterations=metrics.get("iterations", 0),
        reseeded=metrics.get("reseeded", 0),
    )

