from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from src.errors import ArgumentError
from src.models import MetricSummary, RankingResult
from src.settings import TiePolicy

DEFAULT_HITS = (1, 3, 10)


def rank(
    scores: np.ndarray | Sequence[float],
    gold: int,
    filter: Iterable[int] = (),
    tie_policy: TiePolicy = TiePolicy.average,
) -> float:
    """
    Rank of `gold` among all candidates after removing the filtered ones.
    Ties with gold count half under the average policy, not at all under
    optimistic and fully under pessimistic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= gold < scores.shape[0]:
        raise ArgumentError(f"gold {gold} outside [0, {scores.shape[0]})")

    excluded = np.fromiter(filter, dtype=np.int64)
    if np.any(excluded == gold):
        raise ArgumentError("gold candidate must not be filtered")

    candidates = scores.copy()
    if excluded.size:
        candidates[excluded] = -np.inf

    target = candidates[gold]
    higher = int(np.count_nonzero(candidates > target))
    ties = int(np.count_nonzero(candidates == target)) - 1

    if tie_policy == TiePolicy.optimistic:
        return float(1 + higher)
    if tie_policy == TiePolicy.pessimistic:
        return float(1 + higher + ties)
    return 1.0 + higher + ties / 2.0


def summarize(
    ranks: Sequence[float], hits_at: Sequence[int] = DEFAULT_HITS
) -> MetricSummary:
    if not ranks:
        return MetricSummary(mrr=0.0, hits={k: 0.0 for k in hits_at}, count=0)
    values = np.asarray(ranks, dtype=np.float64)
    return MetricSummary(
        mrr=float(np.mean(1.0 / values)),
        hits={k: float(np.mean(values <= k)) for k in sorted(hits_at)},
        count=len(values),
    )


def summarize_by_relation(
    results: Sequence[RankingResult],
    relation_names: Sequence[str],
    base_of: Sequence[int],
    hits_at: Sequence[int] = DEFAULT_HITS,
) -> dict[str, MetricSummary]:
    """Both query directions of a tuple are booked on its forward relation."""
    grouped: dict[int, list[float]] = defaultdict(list)
    for result in results:
        grouped[base_of[result.rel]].append(result.rank)
    return {
        relation_names[rel]: summarize(ranks, hits_at)
        for rel, ranks in sorted(grouped.items())
    }
