from typing import Optional

import numpy as np
from loguru import logger

from src.kg import Graph
from src.models import ContrastiveSample, ContrastiveSampleSet, Direction, Split


def _draw_negative(
    graph: Graph, anchor: int, rng: np.random.Generator, max_attempts: int
) -> Optional[int]:
    # anchor linked to every other node: no negative can exist
    if graph.degree(anchor) + (0 if graph.linked(anchor, anchor) else 1) >= graph.num_nodes:
        return None

    for _ in range(max_attempts):
        candidate = int(rng.integers(graph.num_nodes))
        if candidate != anchor and not graph.linked(anchor, candidate):
            return candidate
    return None


def build_samples(
    graph: Graph, seed: int, max_rejection_attempts: int = 100
) -> ContrastiveSampleSet:
    """
    One forward sample (h, t, t̄) and one reverse sample (t, h, h̄) per
    original train edge. Negatives are drawn uniformly among nodes with no
    link, in either direction, to the anchor.
    """
    rng = np.random.default_rng(seed)
    samples: list[ContrastiveSample] = []
    skipped = 0

    for head, _, tail in graph.edges(Split.train, include_inverse=False):
        for anchor, positive, direction in (
            (head, tail, Direction.forward),
            (tail, head, Direction.reverse),
        ):
            negative = _draw_negative(graph, anchor, rng, max_rejection_attempts)
            if negative is None:
                skipped += 1
                continue
            samples.append(
                ContrastiveSample(
                    anchor=anchor,
                    positive=positive,
                    hard_negative=negative,
                    direction=direction,
                )
            )

    if skipped:
        logger.warning(f"Skipped {skipped} contrastive samples without a valid negative")
    logger.info(f"Built {len(samples)} contrastive samples")
    return ContrastiveSampleSet(samples=samples, skipped=skipped)
