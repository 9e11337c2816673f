from collections import defaultdict
from typing import Iterable, Protocol, Sequence

import numpy as np
import torch
from loguru import logger

from src.kg import GOLD_SPLITS, Graph
from src.models import KGTuple, Metrics, QueryDirection, RankingResult
from src.settings import EvalSetting, TiePolicy
from src.utils import timed_stage

from .ranking import DEFAULT_HITS, rank, summarize, summarize_by_relation


class Scorer(Protocol):
    def score(self, heads: torch.Tensor, rels: torch.Tensor) -> torch.Tensor:
        """(B,) head ids and relation ids -> (B, |N|) candidate scores."""
        ...


def known_tails(graph: Graph) -> dict[tuple[int, int], set[int]]:
    """All tails per (head, rel) query over train, valid and test, inverses included."""
    tails: dict[tuple[int, int], set[int]] = defaultdict(set)
    for head, rel, tail in graph.edges(*GOLD_SPLITS):
        tails[(head, rel)].add(tail)
    return tails


def _queries(
    tuples: Iterable[KGTuple], graph: Graph
) -> list[tuple[int, int, int, QueryDirection]]:
    queries = []
    missing_inverse = 0
    for head, rel, tail in tuples:
        queries.append((head, rel, tail, QueryDirection.forward))
        inverse = graph.inverse_relation(rel)
        if inverse is None:
            missing_inverse += 1
            continue
        queries.append((tail, inverse, head, QueryDirection.inverse))
    if missing_inverse:
        logger.warning(
            f"{missing_inverse} tuples have no inverse relation; ranked forward only"
        )
    return queries


def rank_queries(
    model: Scorer,
    tuples: Sequence[KGTuple],
    graph: Graph,
    setting: EvalSetting = EvalSetting.filtered,
    tie_policy: TiePolicy = TiePolicy.average,
    batch_size: int = 256,
) -> list[RankingResult]:
    queries = _queries(tuples, graph)
    filtered = setting == EvalSetting.filtered
    gold_sets = known_tails(graph) if filtered else {}

    results: list[RankingResult] = []
    for start in range(0, len(queries), batch_size):
        batch = queries[start : start + batch_size]
        heads = torch.tensor([q[0] for q in batch], dtype=torch.long)
        rels = torch.tensor([q[1] for q in batch], dtype=torch.long)
        with torch.no_grad():
            scores = model.score(heads, rels).detach().cpu().numpy().astype(np.float64)

        for row, (head, rel, gold, direction) in zip(scores, batch):
            others = gold_sets.get((head, rel), set()) - {gold} if filtered else set()
            results.append(
                RankingResult(
                    head=head,
                    rel=rel,
                    gold=gold,
                    rank=rank(row, gold, others, tie_policy),
                    filtered=filtered,
                    direction=direction,
                )
            )
    return results


def aggregate(
    results: Sequence[RankingResult],
    graph: Graph,
    hits_at: Sequence[int] = DEFAULT_HITS,
) -> Metrics:
    """Unweighted mean over every ranking event, split by direction and relation."""
    overall = summarize([r.rank for r in results], hits_at)
    by_direction = {
        direction: summarize(
            [r.rank for r in results if r.direction == direction], hits_at
        )
        for direction in QueryDirection
    }
    per_relation = summarize_by_relation(
        results,
        [relation.name for relation in graph.relations],
        [relation.base_id for relation in graph.relations],
        hits_at,
    )
    return Metrics(
        **overall.model_dump(),
        forward=by_direction[QueryDirection.forward],
        inverse=by_direction[QueryDirection.inverse],
        per_relation=per_relation,
    )


@timed_stage
def evaluate_with_ranks(
    model: Scorer,
    tuples: Sequence[KGTuple],
    graph: Graph,
    setting: EvalSetting = EvalSetting.filtered,
    tie_policy: TiePolicy = TiePolicy.average,
    hits_at: Sequence[int] = DEFAULT_HITS,
) -> tuple[Metrics, list[RankingResult]]:
    results = rank_queries(model, tuples, graph, setting, tie_policy)
    metrics = aggregate(results, graph, hits_at)
    logger.info(
        f"{setting} evaluation over {metrics.count} queries: MRR {metrics.mrr:.4f}, "
        + ", ".join(f"HITS@{k} {v:.4f}" for k, v in metrics.hits.items())
    )
    return metrics, results


def evaluate(
    model: Scorer,
    tuples: Sequence[KGTuple],
    graph: Graph,
    setting: EvalSetting = EvalSetting.filtered,
    tie_policy: TiePolicy = TiePolicy.average,
    hits_at: Sequence[int] = DEFAULT_HITS,
) -> Metrics:
    metrics, _ = evaluate_with_ranks(model, tuples, graph, setting, tie_policy, hits_at)
    return metrics
