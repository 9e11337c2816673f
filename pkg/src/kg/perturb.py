import numpy as np
from loguru import logger

from src.errors import ArgumentError
from src.models import EmbeddingMatrix, KGTuple, Relation, Split

from .graph import Graph, inverse_name

SIM_RELATION = "SIM"


def split_train_edges(
    graph: Graph, fraction: float, seed: int
) -> tuple[list[KGTuple], list[KGTuple]]:
    """
    Partition the forward train edges into (kept, removed), removing exactly
    floor(fraction * |train edges|) edges drawn uniformly without replacement.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ArgumentError(f"fraction must lie in [0, 1], got {fraction}")

    forward = graph.edges(Split.train, include_inverse=False)
    n_remove = int(np.floor(fraction * len(forward)))

    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(len(forward), size=n_remove, replace=False).tolist())

    kept = [edge for i, edge in enumerate(forward) if i not in chosen]
    removed = [edge for i, edge in enumerate(forward) if i in chosen]
    return kept, removed


def sparsify(graph: Graph, fraction: float, seed: int) -> Graph:
    """Remove a seeded fraction of train edges together with their inverse edges."""
    _, removed = split_train_edges(graph, fraction, seed)
    if not removed:
        return graph

    dropped = set(removed)
    for edge in removed:
        inverse = graph.inverse_edge(edge)
        if inverse is not None:
            dropped.add(inverse)

    edges = {
        edge: split for edge, split in graph.edge_splits.items() if edge not in dropped
    }
    logger.info(
        f"Sparsified graph: removed {len(removed)} train edges "
        f"(fraction={fraction}, seed={seed})"
    )
    return graph.replace_edges(edges)


def _most_similar(
    values: np.ndarray, top_k: int, min_sim: float, chunk_size: int
) -> set[tuple[int, int]]:
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    unit = np.divide(values, norms, out=np.zeros_like(values), where=norms > 0)

    pairs: set[tuple[int, int]] = set()
    for start in range(0, unit.shape[0], chunk_size):
        block = unit[start : start + chunk_size] @ unit.T
        for offset, sims in enumerate(block):
            node = start + offset
            sims[node] = -np.inf
            # stable sort keeps the lower node id first among equal similarities
            order = np.argsort(-sims, kind="stable")[:top_k]
            for other in order:
                if sims[other] >= min_sim:
                    pairs.add((min(node, other), max(node, other)))
    return pairs


def densify_by_similarity(
    graph: Graph,
    e_sem: EmbeddingMatrix,
    top_k: int,
    min_sim: float,
    chunk_size: int = 1024,
) -> Graph:
    """
    Connect each node to its top_k most cosine-similar nodes with a synthetic
    SIM relation. Synthetic edges feed the graph encoder and negative sampling
    but never the evaluation gold sets.
    """
    if e_sem.num_rows != graph.num_nodes:
        raise ArgumentError(
            f"embedding rows ({e_sem.num_rows}) != node count ({graph.num_nodes})"
        )
    if top_k < 0 or top_k >= graph.num_nodes:
        raise ArgumentError(
            f"top_k must lie in [0, {graph.num_nodes}), got {top_k}"
        )
    if top_k == 0:
        return graph

    pairs = _most_similar(e_sem.values, top_k, min_sim, chunk_size)

    relations = list(graph.relations)
    sim_rel = graph.relation_id(SIM_RELATION)
    sim_inverse = graph.inverse_relation(sim_rel) if sim_rel is not None else None
    if sim_rel is None or not relations[sim_rel].synthetic:
        taken = {relation.name for relation in relations}
        name = SIM_RELATION if SIM_RELATION not in taken else f"{SIM_RELATION}_synthetic"
        sim_inverse = None
        sim_rel = len(relations)
        relations.append(Relation(id=sim_rel, name=name, base_id=sim_rel, synthetic=True))
        if graph.augmented:
            sim_inverse = sim_rel + 1
            taken.add(name)
            relations.append(
                Relation(
                    id=sim_rel + 1,
                    name=inverse_name(name, taken),
                    is_inverse=True,
                    base_id=sim_rel,
                    synthetic=True,
                )
            )

    edges = graph.edge_splits
    added = 0
    for node, other in sorted(pairs):
        edge = KGTuple(node, sim_rel, other)
        if edge in edges:
            continue
        edges[edge] = Split.synthetic
        added += 1
        if sim_inverse is not None:
            edges[KGTuple(other, sim_inverse, node)] = Split.synthetic

    logger.info(f"Densified graph with {added} synthetic {SIM_RELATION} edges")
    return Graph(graph.nodes, relations, edges, augmented=graph.augmented)
