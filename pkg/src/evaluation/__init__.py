from .evaluate import (
    Scorer,
    aggregate,
    evaluate,
    evaluate_with_ranks,
    known_tails,
    rank_queries,
)
from .export import write_metrics, write_rank_dump, write_top_candidates
from .ranking import DEFAULT_HITS, rank, summarize, summarize_by_relation

__all__ = [
    "Scorer",
    "aggregate",
    "evaluate",
    "evaluate_with_ranks",
    "known_tails",
    "rank_queries",
    "write_metrics",
    "write_rank_dump",
    "write_top_candidates",
    "DEFAULT_HITS",
    "rank",
    "summarize",
    "summarize_by_relation",
]
